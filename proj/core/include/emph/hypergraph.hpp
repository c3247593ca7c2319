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

#include <array>
#include <cstdint>
#include <tuple>

#include "emph/common.hpp"

namespace emph {

// A valid orientation of a 3-edge: first vertex free-form, the remaining two
// in increasing order (v1 < v2). The i-th orientation of an edge puts the
// i-th smallest vertex first; the 0-th is the canonical orientation.
// The optional label carries a key ordinal through the peeling streams.
struct OrientedEdge {
    vertex_t v0 = 0;
    vertex_t v1 = 0;
    vertex_t v2 = 0;
    std::uint64_t label = 0;

    bool valid() const {
        return v1 < v2 && v0 != v1 && v0 != v2;
    }

    bool operator==(const OrientedEdge& o) const {
        return v0 == o.v0 && v1 == o.v1 && v2 == o.v2 && label == o.label;
    }
};

inline void require_valid(const OrientedEdge& e) {
    if (!e.valid()) throw ContractError("not a valid orientation");
}

// Sorted vertex triple of an edge; identifies the edge itself.
inline std::tuple<vertex_t, vertex_t, vertex_t> sorted_vertices(const OrientedEdge& e) {
    vertex_t a = e.v0, b = e.v1, c = e.v2;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    return {a, b, c};
}

inline OrientedEdge canonical_of(const OrientedEdge& e) {
    require_valid(e);
    auto [a, b, c] = sorted_vertices(e);
    return {a, b, c, e.label};
}

// All three valid orientations, in orientation-index order.
inline std::array<OrientedEdge, 3> orientations_of(const OrientedEdge& e) {
    require_valid(e);
    auto [a, b, c] = sorted_vertices(e);
    return {OrientedEdge{a, b, c, e.label},
            OrientedEdge{b, a, c, e.label},
            OrientedEdge{c, a, b, e.label}};
}

// Rank of v0 among the edge's vertices: 0, 1 or 2.
inline unsigned orientation_index_of(const OrientedEdge& e) {
    require_valid(e);
    return (e.v0 > e.v1 ? 1u : 0u) + (e.v0 > e.v2 ? 1u : 0u);
}

// Incidence list of a vertex, stored as a degree plus the positionwise XOR of
// all incident valid orientations. Degree-1 lists hand back their unique edge
// without the structure ever storing it.
struct PackedIncidenceList {
    vertex_t v0 = 0;
    std::uint32_t degree = 0;
    vertex_t xv1 = 0;
    vertex_t xv2 = 0;
    std::uint64_t xlabel = 0;

    void add_edge(const OrientedEdge& e) {
        if (e.v0 != v0) throw ContractError("add_edge: orientation does not start at this vertex");
        ++degree;
        xv1 ^= e.v1;
        xv2 ^= e.v2;
        xlabel ^= e.label;
    }

    void delete_edge(const OrientedEdge& e) {
        if (e.v0 != v0) throw ContractError("delete_edge: orientation does not start at this vertex");
        if (degree == 0) throw FormatError("delete_edge: degree underflow, stream corrupt");
        --degree;
        xv1 ^= e.v1;
        xv2 ^= e.v2;
        xlabel ^= e.label;
    }

    OrientedEdge retrieve_edge() const {
        if (degree != 1) throw ContractError("retrieve_edge requires degree 1");
        return {v0, xv1, xv2, xlabel};
    }

    bool operator==(const PackedIncidenceList& o) const {
        return v0 == o.v0 && degree == o.degree && xv1 == o.xv1 && xv2 == o.xv2 &&
               xlabel == o.xlabel;
    }
};

}  // namespace emph
