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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace emph {

using vertex_t = std::uint64_t;

// Edge arity. The algorithms are written for 3-hypergraphs; this constant
// marks every place the arity enters, should a generalization ever be needed.
inline constexpr unsigned kArity = 3;

// Peelability threshold c3 for random 3-hypergraphs. Sparsity gamma must
// exceed this for the 2-core to be empty with high probability.
inline constexpr double kPeelThreshold = 1.221;

inline constexpr double kDefaultGamma = 1.23;

// Vertex ids must fit the fixed-width stream fields; 48 bits is far beyond
// any key set this code is expected to handle.
inline constexpr unsigned kMaxVertexBits = 48;

enum class PeelStatus { kPeeled, kTwoCore };

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or mapping failure.
class IoError : public Error {
  public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// A stream decoded to something impossible: bad magic, truncation,
// degree underflow, join mismatch. Always indicates corruption or a bug.
class FormatError : public Error {
  public:
    explicit FormatError(const std::string& what) : Error(what) {}
};

// Caller violated an operation precondition.
class ContractError : public Error {
  public:
    explicit ContractError(const std::string& what) : Error(what) {}
};

// Construction could not complete (unpeelable input after retries,
// persistent signature collisions, over-budget in-memory build).
class BuildError : public Error {
  public:
    explicit BuildError(const std::string& what) : Error(what) {}
};

// An external sort cannot be planned within the memory budget.
class PlanError : public Error {
  public:
    explicit PlanError(const std::string& what) : Error(what) {}
};

// Number of vertices for n keys at sparsity gamma, rounded up to a multiple
// of 3 so the vertex set splits into three exact parts. Parts of one vertex
// would make every edge identical, so two or more keys get parts of at
// least two.
inline vertex_t vertex_count_for(std::uint64_t n, double gamma) {
    double raw = gamma * static_cast<double>(n);
    auto m = static_cast<vertex_t>(raw);
    if (static_cast<double>(m) < raw) ++m;
    m = (m + 2) / 3 * 3;
    vertex_t floor = n >= 2 ? 6 : 3;
    return m < floor ? floor : m;
}

inline unsigned bits_for_value(std::uint64_t max_value) {
    unsigned w = 1;
    while (w < 64 && (max_value >> w) != 0) ++w;
    return w;
}

}  // namespace emph
