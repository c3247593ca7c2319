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
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>

#include "emph/common.hpp"

namespace emph {

// Access-pattern instrumentation. read/write counters are bytes moved by
// sequential or per-region cursors; rewinds counts pass starts (a cursor
// repositioned to the start of its data); random_seeks counts unstructured
// repositioning, which the peeling pipeline never performs.
struct IoCounters {
    std::uint64_t read_bytes = 0;
    std::uint64_t write_bytes = 0;
    std::uint64_t rewinds = 0;
    std::uint64_t random_seeks = 0;

    IoCounters& operator+=(const IoCounters& o) {
        read_bytes += o.read_bytes;
        write_bytes += o.write_bytes;
        rewinds += o.rewinds;
        random_seeks += o.random_seeks;
        return *this;
    }
};

// RAII memory map over a file, resizable. Mapped writable maps are shared,
// so stores reach the file without explicit write calls.
class MappedFile {
  public:
    MappedFile() = default;
    ~MappedFile();
    MappedFile(MappedFile&&) noexcept;
    MappedFile& operator=(MappedFile&&) noexcept;
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;

    static MappedFile create(const std::filesystem::path& path, std::uint64_t bytes);
    static MappedFile open_readonly(const std::filesystem::path& path);

    void resize(std::uint64_t bytes);

    std::uint8_t* data() { return data_; }
    const std::uint8_t* data() const { return data_; }
    std::uint64_t size() const { return size_; }
    const std::filesystem::path& path() const { return path_; }
    bool writable() const { return writable_; }

  private:
    void map_current();
    void unmap();

    std::filesystem::path path_;
    int fd_ = -1;
    std::uint8_t* data_ = nullptr;
    std::uint64_t size_ = 0;
    bool writable_ = false;
};

namespace detail {
struct WorkspaceState {
    std::map<std::string, std::uint64_t> file_bytes;
    std::uint64_t total_bytes = 0;
    std::uint64_t peak_bytes = 0;
    IoCounters totals;

    void set_file_size(const std::string& name, std::uint64_t bytes) {
        auto& cur = file_bytes[name];
        total_bytes += bytes - cur;
        cur = bytes;
        if (total_bytes > peak_bytes) peak_bytes = total_bytes;
    }
};
}  // namespace detail

class SequentialStream;

// A directory of temporary streams with combined size and I/O accounting.
// Peak usage is tracked over on-disk capacity, not logical content, so
// preallocation slack is charged honestly.
class Workspace {
  public:
    explicit Workspace(std::filesystem::path dir, bool keep = false);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    SequentialStream create_stream(const std::string& filename);
    void note_extra_file(const std::filesystem::path& path);

    const std::filesystem::path& dir() const { return dir_; }
    std::uint64_t peak_bytes() const { return state_->peak_bytes; }
    IoCounters io_totals() const { return state_->totals; }

  private:
    std::filesystem::path dir_;
    bool keep_;
    std::shared_ptr<detail::WorkspaceState> state_;
};

// File-backed byte stream restricted to scan-order access: sequential read
// passes, appends, and structured per-region cursors (a sort distributing
// into k regions advances k independent sequential cursors; that is still
// scan I/O, not seeking). Capacity grows geometrically with a small factor
// to keep disk high-water close to logical content.
class SequentialStream {
  public:
    SequentialStream(std::shared_ptr<detail::WorkspaceState> state,
                     std::filesystem::path path, std::string name);
    SequentialStream(SequentialStream&&) = default;
    SequentialStream& operator=(SequentialStream&&) = default;

    const std::string& name() const { return name_; }
    std::uint64_t size() const { return logical_; }

    std::span<const std::uint8_t> bytes() const {
        return {file_.data(), logical_};
    }
    std::span<std::uint8_t> mutable_bytes() {
        return {file_.data(), logical_};
    }

    // Pass bookkeeping. A sequential read pass and an in-place rewrite pass
    // both reposition a read cursor to the stream start; a region pass is one
    // logical sweep driven through per-region cursors.
    void begin_read_pass() { ++io_.rewinds; ++state_->totals.rewinds; }
    void begin_region_pass() { ++io_.rewinds; ++state_->totals.rewinds; }
    void note_random_seek() { ++io_.random_seeks; ++state_->totals.random_seeks; }

    void count_read(std::uint64_t n) {
        io_.read_bytes += n;
        state_->totals.read_bytes += n;
    }
    void count_write(std::uint64_t n) {
        io_.write_bytes += n;
        state_->totals.write_bytes += n;
    }

    void append(const void* src, std::size_t n);
    void write_at(std::uint64_t off, const void* src, std::size_t n);
    // Extends logical size without initializing content.
    void extend(std::uint64_t n);
    void truncate(std::uint64_t new_size);
    void reserve(std::uint64_t bytes);

    const IoCounters& io() const { return io_; }
    const std::filesystem::path& path() const { return file_.path(); }

  private:
    void ensure_capacity(std::uint64_t bytes);

    std::shared_ptr<detail::WorkspaceState> state_;
    MappedFile file_;
    std::string name_;
    std::uint64_t logical_ = 0;
    IoCounters io_;
};

}  // namespace emph
