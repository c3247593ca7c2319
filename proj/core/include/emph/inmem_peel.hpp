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

#include <span>
#include <vector>

#include "emph/common.hpp"
#include "emph/hypergraph.hpp"

namespace emph {

struct PeelResult {
    PeelStatus status = PeelStatus::kPeeled;
    // Peel-time orientations, free vertex first; a triangular order when
    // status is kPeeled.
    std::vector<OrientedEdge> order;
    std::uint64_t core_edges = 0;
};

// Standard linear-time greedy peeling over packed incidence lists: one
// fixed-size record per vertex, a work stack of degree-1 vertices. TwoCore
// is a result, not an error.
PeelResult peel_in_memory(std::span<const OrientedEdge> edges, vertex_t m);

struct LayeredPeelResult {
    PeelStatus status = PeelStatus::kPeeled;
    // Layers in round order; each layer holds kept orientations sorted by
    // canonical edge, duplicates resolved toward the smallest free vertex.
    std::vector<std::vector<OrientedEdge>> layers;
    std::uint64_t core_edges = 0;

    std::uint64_t peeled() const {
        std::uint64_t s = 0;
        for (const auto& l : layers) s += l.size();
        return s;
    }
};

// Round-synchronous peeling: all degree-1 vertices of a round are extracted
// against the round-start state, deduplicated per edge, then deleted
// together. Produces exactly the layer decomposition and kept orientations
// of the external pipeline, so assignments built from either agree.
LayeredPeelResult peel_layers_in_memory(std::span<const OrientedEdge> edges, vertex_t m);

// Working-set estimate of the in-memory pipeline (incidence records, work
// stack, emitted order), used for budget throttling.
std::uint64_t inmem_working_bytes(std::uint64_t n, vertex_t m);

}  // namespace emph
