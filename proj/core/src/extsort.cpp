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

#include "emph/extsort.hpp"

#include <bit>
#include <string>

namespace emph {

std::uint64_t plan_buckets(std::uint64_t data_bytes, std::uint64_t memory_budget,
                           std::uint64_t buffer_bytes) {
    if (buffer_bytes == 0 || memory_budget < 2 * buffer_bytes)
        throw ContractError("memory budget must cover at least two sort buffers");
    if (data_bytes == 0) return 1;

    std::uint64_t want = (4 * data_bytes + memory_budget - 1) / memory_budget;
    std::uint64_t k = std::bit_ceil(want == 0 ? std::uint64_t{1} : want);

    std::uint64_t clamp = std::bit_floor(memory_budget / buffer_bytes);
    if (k > clamp) k = clamp;
    if (k > MicroHistogram::kSlots) k = MicroHistogram::kSlots;

    std::uint64_t expected_bucket = (data_bytes + k - 1) / k;
    if (expected_bucket > memory_budget)
        throw PlanError(
            "sort plan infeasible: expected bucket of " + std::to_string(expected_bucket) +
            " bytes exceeds the memory budget of " + std::to_string(memory_budget) +
            " bytes; the two-step bucket sort requires a budget of order sqrt(T*S)");
    return k;
}

}  // namespace emph
