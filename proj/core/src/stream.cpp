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

#include "emph/stream.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>
#include <utility>

namespace emph {

namespace {
std::string errno_text(const std::string& what, const std::filesystem::path& p) {
    return what + " '" + p.string() + "': " + std::strerror(errno);
}
}  // namespace

MappedFile::~MappedFile() { unmap(); }

MappedFile::MappedFile(MappedFile&& o) noexcept
    : path_(std::move(o.path_)), fd_(o.fd_), data_(o.data_), size_(o.size_), writable_(o.writable_) {
    o.fd_ = -1;
    o.data_ = nullptr;
    o.size_ = 0;
}

MappedFile& MappedFile::operator=(MappedFile&& o) noexcept {
    if (this != &o) {
        unmap();
        path_ = std::move(o.path_);
        fd_ = o.fd_;
        data_ = o.data_;
        size_ = o.size_;
        writable_ = o.writable_;
        o.fd_ = -1;
        o.data_ = nullptr;
        o.size_ = 0;
    }
    return *this;
}

MappedFile MappedFile::create(const std::filesystem::path& path, std::uint64_t bytes) {
    MappedFile f;
    f.path_ = path;
    f.writable_ = true;
    f.fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
    if (f.fd_ < 0) throw IoError(errno_text("cannot create", path));
    f.size_ = bytes;
    if (::ftruncate(f.fd_, static_cast<off_t>(bytes)) != 0)
        throw IoError(errno_text("cannot size", path));
    f.map_current();
    return f;
}

MappedFile MappedFile::open_readonly(const std::filesystem::path& path) {
    MappedFile f;
    f.path_ = path;
    f.writable_ = false;
    f.fd_ = ::open(path.c_str(), O_RDONLY);
    if (f.fd_ < 0) throw IoError(errno_text("cannot open", path));
    struct stat st{};
    if (::fstat(f.fd_, &st) != 0) throw IoError(errno_text("cannot stat", path));
    f.size_ = static_cast<std::uint64_t>(st.st_size);
    f.map_current();
    return f;
}

void MappedFile::resize(std::uint64_t bytes) {
    if (!writable_) throw IoError("resize on read-only mapping");
    if (data_) {
        ::munmap(data_, size_);
        data_ = nullptr;
    }
    size_ = bytes;
    if (::ftruncate(fd_, static_cast<off_t>(bytes)) != 0)
        throw IoError(errno_text("cannot resize", path_));
    map_current();
}

void MappedFile::map_current() {
    if (size_ == 0) {
        data_ = nullptr;
        return;
    }
    int prot = PROT_READ | (writable_ ? PROT_WRITE : 0);
    int flags = writable_ ? MAP_SHARED : MAP_PRIVATE;
    void* p = ::mmap(nullptr, size_, prot, flags, fd_, 0);
    if (p == MAP_FAILED) throw IoError(errno_text("cannot map", path_));
    data_ = static_cast<std::uint8_t*>(p);
    // Hint only; not all platforms honor it.
    ::madvise(data_, size_, MADV_SEQUENTIAL);
}

void MappedFile::unmap() {
    if (data_) {
        ::munmap(data_, size_);
        data_ = nullptr;
    }
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Workspace::Workspace(std::filesystem::path dir, bool keep)
    : dir_(std::move(dir)), keep_(keep), state_(std::make_shared<detail::WorkspaceState>()) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create workspace '" + dir_.string() + "': " + ec.message());
}

Workspace::~Workspace() {
    if (!keep_) {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
}

SequentialStream Workspace::create_stream(const std::string& filename) {
    return SequentialStream(state_, dir_ / filename, filename);
}

void Workspace::note_extra_file(const std::filesystem::path& path) {
    std::error_code ec;
    auto sz = std::filesystem::file_size(path, ec);
    if (!ec) state_->set_file_size(path.filename().string(), sz);
}

SequentialStream::SequentialStream(std::shared_ptr<detail::WorkspaceState> state,
                                   std::filesystem::path path, std::string name)
    : state_(std::move(state)), file_(MappedFile::create(path, 0)), name_(std::move(name)) {
    state_->set_file_size(name_, 0);
}

void SequentialStream::ensure_capacity(std::uint64_t bytes) {
    if (bytes <= file_.size()) return;
    // Grow by at least 64 KiB and at most 1/16 above the request, so disk
    // capacity never strays far from content.
    std::uint64_t grown = bytes + bytes / 16;
    std::uint64_t min_step = file_.size() + (1u << 16);
    if (grown < min_step) grown = min_step;
    if (grown < bytes) grown = bytes;
    file_.resize(grown);
    state_->set_file_size(name_, grown);
}

void SequentialStream::append(const void* src, std::size_t n) {
    ensure_capacity(logical_ + n);
    std::memcpy(file_.data() + logical_, src, n);
    logical_ += n;
    count_write(n);
}

void SequentialStream::write_at(std::uint64_t off, const void* src, std::size_t n) {
    if (off + n > logical_) throw ContractError("region write past logical end");
    std::memcpy(file_.data() + off, src, n);
    count_write(n);
}

void SequentialStream::extend(std::uint64_t n) {
    ensure_capacity(logical_ + n);
    logical_ += n;
}

void SequentialStream::truncate(std::uint64_t new_size) {
    if (new_size > logical_) throw ContractError("truncate cannot grow");
    logical_ = new_size;
    file_.resize(new_size);
    state_->set_file_size(name_, new_size);
}

void SequentialStream::reserve(std::uint64_t bytes) { ensure_capacity(bytes); }

}  // namespace emph
