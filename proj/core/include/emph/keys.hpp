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
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "emph/common.hpp"
#include "emph/stream.hpp"

namespace emph {

// Resettable forward iteration over a key set. Construction makes several
// passes (count, then one hash pass per seed attempt), so sources must
// rewind cheaply.
class KeySource {
  public:
    virtual ~KeySource() = default;
    virtual void reset() = 0;
    // The view stays valid until the next call.
    virtual std::optional<std::string_view> next() = 0;
    virtual std::uint64_t count() = 0;
};

// Newline-delimited keys; the final line may omit its newline. Keys must not
// contain newlines themselves.
class LinesKeyFile final : public KeySource {
  public:
    explicit LinesKeyFile(const std::filesystem::path& path);
    void reset() override;
    std::optional<std::string_view> next() override;
    std::uint64_t count() override;

  private:
    MappedFile file_;
    std::uint64_t pos_ = 0;
    std::optional<std::uint64_t> count_;
};

// u32 little-endian length prefix followed by that many raw bytes.
class Rec32KeyFile final : public KeySource {
  public:
    explicit Rec32KeyFile(const std::filesystem::path& path);
    void reset() override;
    std::optional<std::string_view> next() override;
    std::uint64_t count() override;

  private:
    MappedFile file_;
    std::uint64_t pos_ = 0;
    std::optional<std::uint64_t> count_;
};

// Counter-mode synthetic keys: 16 hex characters of base + i, collision-free
// by construction and deterministic in the generator seed.
class SyntheticKeys final : public KeySource {
  public:
    SyntheticKeys(std::uint64_t n, std::uint64_t generator_seed);
    void reset() override;
    std::optional<std::string_view> next() override;
    std::uint64_t count() override { return n_; }

  private:
    std::uint64_t n_;
    std::uint64_t base_;
    std::uint64_t i_ = 0;
    char buf_[17] = {};
};

std::unique_ptr<KeySource> open_key_file(const std::filesystem::path& path,
                                         const std::string& format);

}  // namespace emph
