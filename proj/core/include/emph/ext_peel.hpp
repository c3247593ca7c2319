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

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "emph/common.hpp"
#include "emph/extsort.hpp"
#include "emph/hypergraph.hpp"
#include "emph/incidence.hpp"
#include "emph/stream.hpp"

namespace emph {

struct PeelConfig {
    std::uint64_t memory_budget = 1ULL << 30;  // bytes shared by sorting and buffers
    std::uint64_t buffer_bytes = 1ULL << 20;   // per-bucket buffer T
    bool tripartite = true;                    // edges respect the three-part vertex split
    unsigned label_bits = 0;                   // 0: unlabeled streams
    bool write_manifest_json = true;
};

struct LayerInfo {
    std::uint64_t offset_records = 0;  // position in the edge file
    std::uint64_t count = 0;           // edges peeled in this round
};

// Size and composition of one incidence stream E_i.
struct EStreamStats {
    std::uint64_t lists = 0;       // live non-isolated vertices
    std::uint64_t live_edges = 0;  // n_i
    std::uint64_t bytes = 0;
    FieldBits bits;
};

// Work done by one round update.
struct RoundUpdate {
    std::uint64_t d_records = 0;  // degree-1 extractions (with duplicates)
    std::uint64_t p_records = 0;  // layer size after dedup
    std::uint64_t u_records = 0;  // degree update list size
    std::uint64_t rewrite_window_high_water = 0;
    std::uint64_t rewrite_spills = 0;
};

struct LayerManifest {
    PeelStatus status = PeelStatus::kPeeled;
    vertex_t m = 0;
    std::uint64_t n = 0;
    unsigned label_bits = 0;
    std::uint64_t core_edges = 0;          // residual edges when TwoCore
    std::vector<LayerInfo> layers;         // concatenation is a peeling order
    std::vector<EStreamStats> e_streams;   // E_0 .. E_rounds
    std::vector<RoundUpdate> updates;      // one per executed round

    std::uint64_t rounds() const { return updates.size(); }
};

// The peeler's streams survive peeling: the edge file holds the layers the
// assignment phase scans, and the incidence file holds the 2-core when
// peeling fails.
struct PeelOutcome {
    LayerManifest manifest;
    SequentialStream edges;
    SequentialStream incidence;
    EdgeLayout layout;
};

// Layered peeling over file-backed streams. Rounds communicate through
// sorted scans only: the degree-1 extraction list D_i is deduplicated into
// the layer P_i, expanded into the degree update list U_i, and merge-joined
// back into the incidence stream, which is rewritten in place. The list of
// degree-1 extractions for the next round falls out of the join, so each
// round costs five sequential passes.
class ExternalPeeler {
  public:
    ExternalPeeler(Workspace& ws, vertex_t m, PeelConfig cfg = {});
    ~ExternalPeeler();

    // Feed one canonical edge (v0 < v1 < v2, parts respected when the config
    // says tripartite, label within the configured width).
    void add_edge(const OrientedEdge& canonical_edge);
    std::uint64_t edge_count() const { return n_; }

    // Builds E_0 (three part-wise passes over the edge file when tripartite,
    // one expanded sort otherwise) and the first extraction list.
    void begin();

    std::uint64_t step();  // one round; returns edges peeled
    bool done() const { return done_; }
    PeelStatus status() const { return status_; }
    std::uint64_t rounds_run() const { return manifest_.updates.size(); }

    PeelOutcome finish();

    // Feed-to-manifest convenience.
    PeelOutcome peel();

    SequentialStream& incidence_stream() { return e_; }
    SequentialStream& edges_stream() { return edges_; }
    const EdgeLayout& layout() const { return layout_; }
    const LayerManifest& manifest() const { return manifest_; }

  private:
    struct Segment {
        std::uint64_t off = 0;  // records
        std::uint64_t count = 0;
    };

    struct FreeRanges {
        std::vector<Segment> holes;  // sorted by offset, coalesced
        void release(Segment s);
        std::optional<std::uint64_t> try_take(std::uint64_t count);
        std::optional<Segment> tail_hole(std::uint64_t tail);
    };

    std::uint64_t tail_records() const { return edges_.size() / layout_.record_bytes; }
    std::uint64_t scratch_domain() const;
    std::uint64_t canon_key(const std::uint8_t* rec) const;
    SortConfig sort_config(std::uint64_t records) const;

    void build_e0_tripartite(IncidenceStreamWriter& writer);
    void build_e0_general(IncidenceStreamWriter& writer);
    void fold_sorted_group_run(std::span<const std::uint8_t> bucket,
                               IncidenceStreamWriter& writer);
    void emit_extraction(const PackedIncidenceList& list);
    void reclaim_tail();

    Workspace& ws_;
    PeelConfig cfg_;
    vertex_t m_;
    EdgeLayout layout_;
    SequentialStream edges_;
    SequentialStream e_;

    std::uint64_t n_ = 0;
    bool begun_ = false;
    bool done_ = false;
    PeelStatus status_ = PeelStatus::kPeeled;

    MicroHistogram feed_hist_;
    MicroHistogram d_hist_;
    Segment d_cur_;
    std::uint64_t live_ = 0;
    std::uint64_t layers_end_ = 0;
    FreeRanges free_;

    LayerManifest manifest_;
};

// One-call form over an in-memory edge list, for tests and small builds.
PeelOutcome peel_external(Workspace& ws, std::span<const OrientedEdge> edges, vertex_t m,
                          PeelConfig cfg = {});

void write_manifest_json(const std::filesystem::path& path, const LayerManifest& manifest);

}  // namespace emph
