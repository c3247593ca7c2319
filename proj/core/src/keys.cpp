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

#include "emph/keys.hpp"

#include <cstring>

#include "emph/hashing.hpp"

namespace emph {

LinesKeyFile::LinesKeyFile(const std::filesystem::path& path)
    : file_(MappedFile::open_readonly(path)) {}

void LinesKeyFile::reset() { pos_ = 0; }

std::optional<std::string_view> LinesKeyFile::next() {
    if (pos_ >= file_.size()) return std::nullopt;
    const char* base = reinterpret_cast<const char*>(file_.data());
    const char* nl = static_cast<const char*>(
        std::memchr(base + pos_, '\n', file_.size() - pos_));
    std::uint64_t end = nl ? static_cast<std::uint64_t>(nl - base) : file_.size();
    std::string_view key(base + pos_, end - pos_);
    pos_ = nl ? end + 1 : file_.size();
    return key;
}

std::uint64_t LinesKeyFile::count() {
    if (!count_) {
        std::uint64_t save = pos_;
        reset();
        std::uint64_t c = 0;
        while (next()) ++c;
        count_ = c;
        pos_ = save;
    }
    return *count_;
}

Rec32KeyFile::Rec32KeyFile(const std::filesystem::path& path)
    : file_(MappedFile::open_readonly(path)) {}

void Rec32KeyFile::reset() { pos_ = 0; }

std::optional<std::string_view> Rec32KeyFile::next() {
    if (pos_ == file_.size()) return std::nullopt;
    if (pos_ + 4 > file_.size()) throw FormatError("truncated length prefix in key file");
    std::uint32_t len = 0;
    for (unsigned i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(file_.data()[pos_ + i]) << (8 * i);
    pos_ += 4;
    if (pos_ + len > file_.size()) throw FormatError("truncated key record in key file");
    std::string_view key(reinterpret_cast<const char*>(file_.data()) + pos_, len);
    pos_ += len;
    return key;
}

std::uint64_t Rec32KeyFile::count() {
    if (!count_) {
        std::uint64_t save = pos_;
        reset();
        std::uint64_t c = 0;
        while (next()) ++c;
        count_ = c;
        pos_ = save;
    }
    return *count_;
}

SyntheticKeys::SyntheticKeys(std::uint64_t n, std::uint64_t generator_seed)
    : n_(n), base_(remix64(generator_seed)) {}

void SyntheticKeys::reset() { i_ = 0; }

std::optional<std::string_view> SyntheticKeys::next() {
    if (i_ >= n_) return std::nullopt;
    std::uint64_t v = base_ + i_;
    ++i_;
    static const char* hex = "0123456789abcdef";
    for (unsigned d = 0; d < 16; ++d) buf_[d] = hex[(v >> (60 - 4 * d)) & 0xf];
    return std::string_view(buf_, 16);
}

std::unique_ptr<KeySource> open_key_file(const std::filesystem::path& path,
                                         const std::string& format) {
    if (format == "lines") return std::make_unique<LinesKeyFile>(path);
    if (format == "rec32") return std::make_unique<Rec32KeyFile>(path);
    throw ContractError("unknown key file format '" + format + "' (expected lines or rec32)");
}

}  // namespace emph
