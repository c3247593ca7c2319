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

#include "emph/inmem_peel.hpp"

#include <algorithm>
#include <tuple>

namespace emph {

namespace {

struct Entry {
    std::uint32_t degree = 0;
    vertex_t xv1 = 0;
    vertex_t xv2 = 0;
    std::uint64_t xlabel = 0;
};

void fold(Entry& ent, const OrientedEdge& o) {
    ent.xv1 ^= o.v1;
    ent.xv2 ^= o.v2;
    ent.xlabel ^= o.label;
}

std::vector<Entry> build_entries(std::span<const OrientedEdge> edges, vertex_t m) {
    std::vector<Entry> ent(m);
    for (const auto& e : edges) {
        if (!e.valid() || e.v0 >= m || e.v1 >= m || e.v2 >= m)
            throw ContractError("invalid edge fed to the peeler");
        for (const auto& o : orientations_of(e)) {
            Entry& x = ent[o.v0];
            ++x.degree;
            fold(x, o);
        }
    }
    return ent;
}

OrientedEdge retrieve(const std::vector<Entry>& ent, vertex_t v) {
    const Entry& x = ent[v];
    return {v, x.xv1, x.xv2, x.xlabel};
}

}  // namespace

std::uint64_t inmem_working_bytes(std::uint64_t n, vertex_t m) {
    return m * sizeof(Entry) + m * sizeof(vertex_t) + n * sizeof(OrientedEdge);
}

PeelResult peel_in_memory(std::span<const OrientedEdge> edges, vertex_t m) {
    PeelResult res;
    std::vector<Entry> ent = build_entries(edges, m);

    std::vector<vertex_t> stack;
    for (vertex_t v = 0; v < m; ++v)
        if (ent[v].degree == 1) stack.push_back(v);

    res.order.reserve(edges.size());
    while (!stack.empty()) {
        vertex_t v = stack.back();
        stack.pop_back();
        if (ent[v].degree != 1) continue;  // stale entry, vertex emptied meanwhile
        OrientedEdge e = retrieve(ent, v);
        res.order.push_back(e);
        for (const auto& o : orientations_of(e)) {
            Entry& x = ent[o.v0];
            if (x.degree == 0) throw FormatError("incidence underflow, edge list corrupt");
            --x.degree;
            fold(x, o);
            if (x.degree == 1) stack.push_back(o.v0);
        }
    }
    if (res.order.size() == edges.size()) {
        res.status = PeelStatus::kPeeled;
    } else {
        res.status = PeelStatus::kTwoCore;
        res.core_edges = edges.size() - res.order.size();
    }
    return res;
}

LayeredPeelResult peel_layers_in_memory(std::span<const OrientedEdge> edges, vertex_t m) {
    LayeredPeelResult res;
    std::vector<Entry> ent = build_entries(edges, m);

    std::vector<vertex_t> frontier;
    for (vertex_t v = 0; v < m; ++v)
        if (ent[v].degree == 1) frontier.push_back(v);

    std::uint64_t peeled = 0;
    while (!frontier.empty()) {
        // Extract against the round-start state.
        std::vector<OrientedEdge> extracted;
        extracted.reserve(frontier.size());
        for (vertex_t v : frontier)
            if (ent[v].degree == 1) extracted.push_back(retrieve(ent, v));
        if (extracted.empty()) break;

        std::sort(extracted.begin(), extracted.end(), [](const OrientedEdge& a, const OrientedEdge& b) {
            auto ta = sorted_vertices(a);
            auto tb = sorted_vertices(b);
            if (ta != tb) return ta < tb;
            return a.v0 < b.v0;
        });

        std::vector<OrientedEdge> layer;
        layer.reserve(extracted.size());
        for (const auto& e : extracted)
            if (layer.empty() || sorted_vertices(layer.back()) != sorted_vertices(e))
                layer.push_back(e);

        frontier.clear();
        for (const auto& e : layer) {
            for (const auto& o : orientations_of(e)) {
                Entry& x = ent[o.v0];
                if (x.degree == 0) throw FormatError("incidence underflow, edge list corrupt");
                --x.degree;
                fold(x, o);
                if (x.degree == 1) frontier.push_back(o.v0);
            }
        }
        peeled += layer.size();
        res.layers.push_back(std::move(layer));
    }
    if (peeled == edges.size()) {
        res.status = PeelStatus::kPeeled;
    } else {
        res.status = PeelStatus::kTwoCore;
        res.core_edges = edges.size() - peeled;
    }
    return res;
}

}  // namespace emph
