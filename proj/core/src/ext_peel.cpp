// Copyright 2026 The emph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emph/ext_peel.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include <json.hpp>

namespace emph {

void ExternalPeeler::FreeRanges::release(Segment s) {
    if (s.count == 0) return;
    auto it = std::lower_bound(holes.begin(), holes.end(), s.off,
                               [](const Segment& h, std::uint64_t off) { return h.off < off; });
    it = holes.insert(it, s);
    // Coalesce with neighbors.
    if (it != holes.begin()) {
        auto prev = it - 1;
        if (prev->off + prev->count == it->off) {
            prev->count += it->count;
            it = holes.erase(it) - 1;
        }
    }
    auto next = it + 1;
    if (next != holes.end() && it->off + it->count == next->off) {
        it->count += next->count;
        holes.erase(next);
    }
}

std::optional<std::uint64_t> ExternalPeeler::FreeRanges::try_take(std::uint64_t count) {
    if (count == 0) return std::nullopt;
    for (auto it = holes.begin(); it != holes.end(); ++it) {
        if (it->count >= count) {
            std::uint64_t off = it->off;
            it->off += count;
            it->count -= count;
            if (it->count == 0) holes.erase(it);
            return off;
        }
    }
    return std::nullopt;
}

std::optional<ExternalPeeler::Segment> ExternalPeeler::FreeRanges::tail_hole(std::uint64_t tail) {
    if (holes.empty()) return std::nullopt;
    Segment& last = holes.back();
    if (last.off + last.count != tail) return std::nullopt;
    Segment s = last;
    holes.pop_back();
    return s;
}

ExternalPeeler::ExternalPeeler(Workspace& ws, vertex_t m, PeelConfig cfg)
    : ws_(ws),
      cfg_(cfg),
      m_(m),
      layout_(EdgeLayout::for_graph(m, cfg.label_bits)),
      edges_(ws.create_stream("edges.bin")),
      e_(ws.create_stream("E.bin")),
      feed_hist_(cfg.tripartite ? m / 3 : m),
      d_hist_(cfg.tripartite ? m / 3 : m) {
    if (m_ < 3 || (cfg_.tripartite && m_ % 3 != 0))
        throw ContractError("vertex count must be a positive multiple of 3");
    if (cfg_.memory_budget < 2 * cfg_.buffer_bytes)
        throw ContractError("memory budget must cover at least two sort buffers");
}

ExternalPeeler::~ExternalPeeler() = default;

std::uint64_t ExternalPeeler::scratch_domain() const {
    return cfg_.tripartite ? m_ / 3 : m_;
}

std::uint64_t ExternalPeeler::canon_key(const std::uint8_t* rec) const {
    vertex_t v0 = get_bits(rec, 0, layout_.vertex_bits);
    vertex_t v1 = get_bits(rec, layout_.vertex_bits, layout_.vertex_bits);
    return v0 < v1 ? v0 : v1;
}

SortConfig ExternalPeeler::sort_config(std::uint64_t records) const {
    SortConfig cfg;
    cfg.buffer_bytes = cfg_.buffer_bytes;
    cfg.bucket_count = plan_buckets(records * layout_.record_bytes, cfg_.memory_budget,
                                    cfg_.buffer_bytes);
    return cfg;
}

void ExternalPeeler::add_edge(const OrientedEdge& e) {
    if (begun_) throw ContractError("edges must be fed before begin()");
    if (!e.valid() || !(e.v0 < e.v1) || e.v2 >= m_)
        throw ContractError("edges must be canonical with vertices below m");
    if (cfg_.tripartite) {
        vertex_t part = m_ / 3;
        if (e.v0 >= part || e.v1 < part || e.v1 >= 2 * part || e.v2 < 2 * part)
            throw ContractError("edge does not respect the tripartition");
        feed_hist_.add(e.v0);
    }
    if (cfg_.label_bits < 64 && (e.label >> cfg_.label_bits) != 0)
        throw ContractError("edge label does not fit the configured width");
    std::uint8_t rec[32];
    layout_.encode(e, rec);
    edges_.append(rec, layout_.record_bytes);
    ++n_;
}

void ExternalPeeler::emit_extraction(const PackedIncidenceList& list) {
    OrientedEdge e = list.retrieve_edge();
    std::uint8_t rec[32];
    layout_.encode(e, rec);
    d_hist_.add(e.v1 < e.v0 ? e.v1 : e.v0);
    edges_.append(rec, layout_.record_bytes);
    ++d_cur_.count;
}

// Consume one sorted bucket of oriented edges: group by v0, fold each group
// into a packed incidence list, emit it, and extract degree-1 groups. Groups
// never span buckets because equal keys share a bucket.
void ExternalPeeler::fold_sorted_group_run(std::span<const std::uint8_t> bucket,
                                           IncidenceStreamWriter& writer) {
    const std::uint32_t rec = layout_.record_bytes;
    std::optional<PackedIncidenceList> open;
    for (std::size_t off = 0; off < bucket.size(); off += rec) {
        OrientedEdge e = layout_.decode(bucket.data() + off);
        if (open && open->v0 == e.v0) {
            open->add_edge(e);
            continue;
        }
        if (open) {
            writer.append(*open);
            if (open->degree == 1) emit_extraction(*open);
        }
        open = PackedIncidenceList{e.v0, 0, 0, 0, 0};
        open->add_edge(e);
    }
    if (open) {
        writer.append(*open);
        if (open->degree == 1) emit_extraction(*open);
    }
}

void ExternalPeeler::build_e0_tripartite(IncidenceStreamWriter& writer) {
    const vertex_t part = m_ / 3;
    const std::uint32_t rec = layout_.record_bytes;
    MicroHistogram cur = std::move(feed_hist_);
    for (unsigned p = 0; p < 3; ++p) {
        MicroHistogram next(part);
        std::uint64_t shift = static_cast<std::uint64_t>(p) * part;
        auto key = [this, shift](const std::uint8_t* r) { return layout_.v0_of(r) - shift; };
        auto less = [this](const std::uint8_t* a, const std::uint8_t* b) {
            return layout_.v0_of(a) < layout_.v0_of(b);
        };
        RecordSorter<decltype(key), decltype(less)> sorter(
            edges_, 0, n_, rec, part, key, less, sort_config(n_), cfg_.memory_budget);
        sorter.sort_with(cur, [&](std::span<std::uint8_t> bucket, std::uint64_t) {
            fold_sorted_group_run({bucket.data(), bucket.size()}, writer);
            if (p == 2) return BucketDisposition::kDiscard;
            for (std::size_t off = 0; off < bucket.size(); off += rec) {
                OrientedEdge e = layout_.decode(bucket.data() + off);
                OrientedEdge nx = orientations_of(e)[p + 1];
                layout_.encode(nx, bucket.data() + off);
                next.add(nx.v0 - (p + 1) * part);
            }
            return BucketDisposition::kWriteBack;
        });
        cur = std::move(next);
    }
}

void ExternalPeeler::build_e0_general(IncidenceStreamWriter& writer) {
    const std::uint32_t rec = layout_.record_bytes;
    MicroHistogram hist(m_);
    edges_.begin_read_pass();
    for (std::uint64_t i = 0; i < n_; ++i) {
        OrientedEdge e = layout_.decode(edges_.bytes().data() + i * rec);
        for (const auto& o : orientations_of(e)) {
            std::uint8_t out[32];
            layout_.encode(o, out);
            edges_.append(out, rec);
            hist.add(o.v0);
        }
    }
    edges_.count_read(n_ * rec);

    auto key = [this](const std::uint8_t* r) { return layout_.v0_of(r); };
    auto less = [this](const std::uint8_t* a, const std::uint8_t* b) {
        return layout_.v0_of(a) < layout_.v0_of(b);
    };
    RecordSorter<decltype(key), decltype(less)> sorter(
        edges_, n_ * rec, 3 * n_, rec, m_, key, less, sort_config(3 * n_), cfg_.memory_budget);
    sorter.sort_with(hist, [&](std::span<std::uint8_t> bucket, std::uint64_t) {
        fold_sorted_group_run({bucket.data(), bucket.size()}, writer);
        return BucketDisposition::kDiscard;
    });
    free_.release({n_, 3 * n_});
}

void ExternalPeeler::begin() {
    if (begun_) throw ContractError("begin() called twice");
    begun_ = true;
    live_ = n_;
    d_cur_ = {tail_records(), 0};
    if (!cfg_.tripartite) {
        // The expansion list lands first; extractions follow it.
        d_cur_.off += 3 * n_;
    }

    auto writer = IncidenceStreamWriter::fresh(e_, m_, cfg_.label_bits);
    if (cfg_.tripartite)
        build_e0_tripartite(writer);
    else
        build_e0_general(writer);
    std::uint64_t bytes = writer.finish();
    manifest_.e_streams.push_back({writer.count(), live_, bytes, writer.bits()});
}

std::uint64_t ExternalPeeler::step() {
    if (!begun_) throw ContractError("begin() must run before step()");
    if (done_) return 0;
    if (live_ == 0) {
        status_ = PeelStatus::kPeeled;
        done_ = true;
        return 0;
    }
    if (d_cur_.count == 0) {
        status_ = PeelStatus::kTwoCore;
        manifest_.core_edges = live_;
        done_ = true;
        return 0;
    }

    const std::uint32_t rec = layout_.record_bytes;
    RoundUpdate up;
    up.d_records = d_cur_.count;

    // Extraction list: sort by canonical edge, keep the smallest-v0
    // orientation of each edge as its layer record, expand the kept edges
    // into the degree update list. Relocates into reclaimed space when some
    // is available, which keeps the file extent near its round-0 high water.
    auto d_key = [this](const std::uint8_t* r) { return canon_key(r); };
    auto d_less = [this](const std::uint8_t* a, const std::uint8_t* b) {
        OrientedEdge ea = layout_.decode(a);
        OrientedEdge eb = layout_.decode(b);
        auto ta = sorted_vertices(ea);
        auto tb = sorted_vertices(eb);
        if (ta != tb) return ta < tb;
        return ea.v0 < eb.v0;
    };
    RecordSorter<decltype(d_key), decltype(d_less)> dsort(
        edges_, d_cur_.off * rec, d_cur_.count, rec, scratch_domain(), d_key, d_less,
        sort_config(d_cur_.count), cfg_.memory_budget);
    // The update list is at most three records per extraction, so a
    // reclaimed hole of that capacity can host it; the extraction list
    // itself migrates into reclaimed space through its sort. Keeping both
    // low stops the file tail from ratcheting round over round.
    std::uint64_t u_cap = 3 * d_cur_.count;
    std::optional<std::uint64_t> u_hole = free_.try_take(u_cap);
    std::optional<std::uint64_t> moved = free_.try_take(d_cur_.count);
    if (moved) dsort.relocate_output(*moved * rec);

    MicroHistogram u_hist(m_);
    std::uint64_t u_off = u_hole ? *u_hole : tail_records();
    std::uint64_t u_count = 0;
    auto emit_u = [&](const std::uint8_t* r) {
        if (u_hole)
            edges_.write_at((u_off + u_count) * rec, r, rec);
        else
            edges_.append(r, rec);
        ++u_count;
    };
    std::uint64_t layer_start = layers_end_;
    std::uint64_t p_count = 0;
    bool have_prev = false;
    std::tuple<vertex_t, vertex_t, vertex_t> prev_triple;
    MicroHistogram d_fold = std::move(d_hist_);
    dsort.sort_with(d_fold, [&](std::span<std::uint8_t> bucket, std::uint64_t) {
        for (std::size_t off = 0; off < bucket.size(); off += rec) {
            const std::uint8_t* r = bucket.data() + off;
            OrientedEdge e = layout_.decode(r);
            auto t = sorted_vertices(e);
            if (have_prev && t == prev_triple) continue;
            prev_triple = t;
            have_prev = true;
            edges_.write_at(layers_end_ * rec, r, rec);
            ++layers_end_;
            ++p_count;
            for (const auto& o : orientations_of(e)) {
                std::uint8_t out[32];
                layout_.encode(o, out);
                emit_u(out);
                u_hist.add(o.v0);
            }
        }
        return BucketDisposition::kDiscard;
    });
    free_.release(d_cur_);
    if (moved) free_.release({*moved, d_cur_.count});
    if (u_hole) free_.release({u_off + u_count, u_cap - u_count});
    reclaim_tail();
    up.p_records = p_count;
    up.u_records = u_count;

    // Degree update: sort U by v0 in place, then merge-join it with the
    // incidence stream. Surviving lists are rewritten in place behind the
    // read cursor; lists reaching degree 1 become the next extraction list.
    Segment u_seg{u_off, u_count};
    auto v0_key = [this](const std::uint8_t* r) { return layout_.v0_of(r); };
    auto v0_less = [this](const std::uint8_t* a, const std::uint8_t* b) {
        OrientedEdge ea = layout_.decode(a);
        OrientedEdge eb = layout_.decode(b);
        return std::tie(ea.v0, ea.v1, ea.v2) < std::tie(eb.v0, eb.v1, eb.v2);
    };
    RecordSorter<decltype(v0_key), decltype(v0_less)> usort(
        edges_, u_seg.off * rec, u_seg.count, rec, m_, v0_key, v0_less,
        sort_config(u_seg.count), cfg_.memory_budget);

    e_.begin_read_pass();
    IncidenceStreamReader reader(e_);
    auto writer = IncidenceStreamWriter::inplace(e_, m_, cfg_.label_bits, cfg_.buffer_bytes);
    Segment d_next{tail_records(), 0};
    MicroHistogram next_d_hist(scratch_domain());
    d_cur_ = d_next;
    d_hist_ = std::move(next_d_hist);

    std::optional<PackedIncidenceList> held;
    auto out_list = [&](const PackedIncidenceList& l, bool matched) {
        if (l.degree == 0) return;
        if (!matched && l.degree < 2)
            throw FormatError("degree-1 list missed by the previous extraction scan");
        writer.append(l);
        if (matched && l.degree == 1) emit_extraction(l);
        writer.pump(reader.byte_pos());
    };
    usort.sort_with(u_hist, [&](std::span<std::uint8_t> bucket, std::uint64_t) {
        for (std::size_t off = 0; off < bucket.size(); off += rec) {
            OrientedEdge ue = layout_.decode(bucket.data() + off);
            if (held && held->v0 == ue.v0) {
                held->delete_edge(ue);
                continue;
            }
            if (held) {
                out_list(*held, true);
                held.reset();
            }
            for (;;) {
                auto l = reader.next();
                if (!l || l->v0 > ue.v0)
                    throw FormatError("degree update for a vertex with no live incidence list");
                if (l->v0 < ue.v0) {
                    out_list(*l, false);
                    continue;
                }
                held = *l;
                break;
            }
            held->delete_edge(ue);
        }
        return BucketDisposition::kDiscard;
    });
    if (held) {
        out_list(*held, true);
        held.reset();
    }
    while (auto l = reader.next()) out_list(*l, false);
    reader.finish();
    up.rewrite_window_high_water = writer.window_high_water();
    up.rewrite_spills = writer.spills();
    std::uint64_t e_bytes = writer.finish();

    free_.release(u_seg);
    live_ -= p_count;
    manifest_.layers.push_back({layer_start, p_count});
    manifest_.updates.push_back(up);
    manifest_.e_streams.push_back({writer.count(), live_, e_bytes, writer.bits()});
    reclaim_tail();
    return p_count;
}

void ExternalPeeler::reclaim_tail() {
    std::uint64_t tail = tail_records();
    while (auto hole = free_.tail_hole(tail)) {
        tail = hole->off;
    }
    if (tail < tail_records()) edges_.truncate(tail * layout_.record_bytes);
}

PeelOutcome ExternalPeeler::finish() {
    if (!done_) throw ContractError("peeling has not terminated");
    manifest_.status = status_;
    manifest_.m = m_;
    manifest_.n = n_;
    manifest_.label_bits = cfg_.label_bits;
    edges_.truncate(layers_end_ * layout_.record_bytes);
    if (cfg_.write_manifest_json) {
        auto path = ws_.dir() / "manifest.json";
        write_manifest_json(path, manifest_);
        ws_.note_extra_file(path);
    }
    return PeelOutcome{std::move(manifest_), std::move(edges_), std::move(e_), layout_};
}

PeelOutcome ExternalPeeler::peel() {
    begin();
    while (!done_) step();
    return finish();
}

PeelOutcome peel_external(Workspace& ws, std::span<const OrientedEdge> edges, vertex_t m,
                          PeelConfig cfg) {
    ExternalPeeler peeler(ws, m, cfg);
    for (const auto& e : edges) peeler.add_edge(e);
    return peeler.peel();
}

void write_manifest_json(const std::filesystem::path& path, const LayerManifest& m) {
    nlohmann::json j;
    j["status"] = m.status == PeelStatus::kPeeled ? "peeled" : "two-core";
    j["m"] = m.m;
    j["n"] = m.n;
    j["label_bits"] = m.label_bits;
    j["core_edges"] = m.core_edges;
    j["rounds"] = m.rounds();
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const auto& l : m.layers)
        layers.push_back({{"offset_records", l.offset_records}, {"count", l.count}});
    auto& streams = j["incidence_streams"] = nlohmann::json::array();
    for (const auto& s : m.e_streams)
        streams.push_back({{"lists", s.lists},
                           {"live_edges", s.live_edges},
                           {"bytes", s.bytes},
                           {"gamma_v0_bits", s.bits.gamma_v0},
                           {"unary_degree_bits", s.bits.unary_degree},
                           {"fixed_bits", s.bits.fixed}});
    auto& updates = j["updates"] = nlohmann::json::array();
    for (const auto& u : m.updates)
        updates.push_back({{"d_records", u.d_records},
                           {"p_records", u.p_records},
                           {"u_records", u.u_records},
                           {"rewrite_window_high_water", u.rewrite_window_high_water},
                           {"rewrite_spills", u.rewrite_spills}});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace emph
