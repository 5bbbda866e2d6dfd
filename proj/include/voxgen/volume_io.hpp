// SPDX-License-Identifier: Apache-2.0
//
// Streaming output: line-granular sinks consuming voxels in z-y-x order, the
// raw little-endian volume format with its detached text header (.raw +
// .rvh), and a memory-mapped volume buffer for rasterizers that need random
// access. Data files are always little-endian regardless of host.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "voxgen/fnv1a.hpp"
#include "voxgen/model.hpp"

namespace voxgen {

struct SinkSummary {
    std::uint64_t lines = 0;
    std::uint64_t voxels = 0;
    std::uint64_t bytes = 0; // little-endian payload size
    std::optional<std::uint64_t> checksum; // FNV-1a 64 over the payload
};

namespace detail {

template <typename T>
void fnv_update_scalars(Fnv1a64& fnv, std::span<const T> values) {
    if constexpr (sizeof(T) == 1 || std::endian::native == std::endian::little) {
        fnv.update(values.data(), values.size_bytes());
    } else {
        for (const T& v : values) {
            std::uint32_t u;
            std::memcpy(&u, &v, sizeof(u));
            const std::byte le[4] = {
                static_cast<std::byte>(u), static_cast<std::byte>(u >> 8),
                static_cast<std::byte>(u >> 16),
                static_cast<std::byte>(u >> 24)};
            fnv.update(le, 4);
        }
    }
}

template <typename T>
void append_le_bytes(std::span<const T> values, std::vector<std::byte>& out) {
    const std::size_t at = out.size();
    out.resize(at + values.size_bytes());
    if constexpr (sizeof(T) == 1 || std::endian::native == std::endian::little) {
        std::memcpy(out.data() + at, values.data(), values.size_bytes());
    } else {
        std::byte* p = out.data() + at;
        for (const T& v : values) {
            std::uint32_t u;
            std::memcpy(&u, &v, sizeof(u));
            p[0] = static_cast<std::byte>(u);
            p[1] = static_cast<std::byte>(u >> 8);
            p[2] = static_cast<std::byte>(u >> 16);
            p[3] = static_cast<std::byte>(u >> 24);
            p += 4;
        }
    }
}

} // namespace detail

/// Checksum of a scalar sequence, defined over its little-endian byte image.
template <typename T>
std::uint64_t checksum_scalars(std::span<const T> values) {
    Fnv1a64 fnv;
    detail::fnv_update_scalars(fnv, values);
    return fnv.digest();
}

/// Base class of all streaming consumers. Enforces the stream contract:
/// lines must arrive as (z,y) = (0,0),(0,1),...,(dz-1,dy-1), each with
/// exactly dx scalars, and finish() must be called exactly once after the
/// last line. Out-of-order, duplicate or misshapen lines throw.
template <typename T>
class LineSink {
public:
    explicit LineSink(const VoxelGrid& grid) : grid_(grid) {
        if (grid.scalar != scalar_traits<T>::kind)
            throw std::invalid_argument(
                std::string("sink scalar type ") + scalar_traits<T>::name +
                " does not match grid scalar " + scalar_name(grid.scalar));
    }
    virtual ~LineSink() = default;

    LineSink(const LineSink&) = delete;
    LineSink& operator=(const LineSink&) = delete;

    void accept_line(std::int32_t z, std::int32_t y, std::span<const T> line) {
        if (finished_)
            throw std::logic_error("accept_line after finish");
        const std::int32_t want_z =
            static_cast<std::int32_t>(lines_seen_ / grid_.dy);
        const std::int32_t want_y =
            static_cast<std::int32_t>(lines_seen_ % grid_.dy);
        if (z != want_z || y != want_y)
            throw std::invalid_argument(
                "line (z=" + std::to_string(z) + ",y=" + std::to_string(y) +
                ") out of order; expected (z=" + std::to_string(want_z) +
                ",y=" + std::to_string(want_y) + ")");
        if (line.size() != static_cast<std::size_t>(grid_.dx))
            throw std::invalid_argument(
                "line has " + std::to_string(line.size()) +
                " scalars, expected " + std::to_string(grid_.dx));
        do_accept(z, y, line);
        ++lines_seen_;
    }

    SinkSummary finish() {
        if (finished_)
            throw std::logic_error("finish called twice");
        if (lines_seen_ != grid_.line_count())
            throw std::runtime_error(
                "volume incomplete: got " + std::to_string(lines_seen_) +
                " of " + std::to_string(grid_.line_count()) + " lines");
        finished_ = true;
        SinkSummary s;
        s.lines = lines_seen_;
        s.voxels = lines_seen_ * static_cast<std::uint64_t>(grid_.dx);
        s.bytes = s.voxels * sizeof(T);
        do_finish(s);
        return s;
    }

    const VoxelGrid& grid() const { return grid_; }

protected:
    virtual void do_accept(std::int32_t z, std::int32_t y,
                           std::span<const T> line) = 0;
    virtual void do_finish(SinkSummary&) {}

private:
    VoxelGrid grid_;
    std::uint64_t lines_seen_ = 0;
    bool finished_ = false;
};

template <typename T>
class NullSink final : public LineSink<T> {
public:
    using LineSink<T>::LineSink;

protected:
    void do_accept(std::int32_t, std::int32_t, std::span<const T>) override {}
};

template <typename T>
class ChecksumSink final : public LineSink<T> {
public:
    using LineSink<T>::LineSink;

protected:
    void do_accept(std::int32_t, std::int32_t,
                   std::span<const T> line) override {
        detail::fnv_update_scalars(fnv_, line);
    }
    void do_finish(SinkSummary& s) override { s.checksum = fnv_.digest(); }

private:
    Fnv1a64 fnv_;
};

inline constexpr std::uint64_t kDefaultMemBudget = 2ULL << 30; // 2 GiB

template <typename T>
class MemSink final : public LineSink<T> {
public:
    explicit MemSink(const VoxelGrid& grid,
                     std::uint64_t byte_budget = kDefaultMemBudget)
        : LineSink<T>(grid) {
        if (grid.byte_count() > byte_budget)
            throw std::runtime_error(
                "volume of " + std::to_string(grid.byte_count()) +
                " bytes exceeds memory budget of " +
                std::to_string(byte_budget));
        data_.reserve(grid.voxel_count());
    }

    const std::vector<T>& data() const { return data_; }
    std::vector<T> take() { return std::move(data_); }

protected:
    void do_accept(std::int32_t, std::int32_t,
                   std::span<const T> line) override {
        data_.insert(data_.end(), line.begin(), line.end());
    }
    void do_finish(SinkSummary& s) override {
        s.checksum = checksum_scalars<T>(data_);
    }

private:
    std::vector<T> data_;
};

// --- raw volume format (.raw data + .rvh detached header) -------------------

/// Parsed .rvh sidecar: grid shape/scalar, the data file name, and any
/// provenance entries (seed, generator, ...) in file order.
struct RawVolumeInfo {
    VoxelGrid grid;
    std::string data_file;
    std::vector<std::pair<std::string, std::string>> provenance;
};

void write_raw_volume_header(const std::filesystem::path& header_path,
                             const RawVolumeInfo& info);
RawVolumeInfo read_raw_volume_header(const std::filesystem::path& header_path);

/// Resolves the data file next to the header and checks that its byte length
/// equals dims * scalar size. Throws on mismatch.
std::filesystem::path resolve_raw_data_file(
    const std::filesystem::path& header_path, const RawVolumeInfo& info);

/// Loads a written volume back into memory (little-endian decode).
template <typename T>
std::vector<T> read_raw_volume_data(const std::filesystem::path& header_path);

namespace detail {
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
}

template <typename T>
std::vector<T> read_raw_volume_data(const std::filesystem::path& header_path) {
    const RawVolumeInfo info = read_raw_volume_header(header_path);
    if (info.grid.scalar != scalar_traits<T>::kind)
        throw std::runtime_error("volume scalar is " +
                                 std::string(scalar_name(info.grid.scalar)) +
                                 ", not " + scalar_traits<T>::name);
    const auto data_path = resolve_raw_data_file(header_path, info);
    const std::vector<std::byte> bytes = detail::read_file_bytes(data_path);
    std::vector<T> values(info.grid.voxel_count());
    if constexpr (sizeof(T) == 1 || std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint32_t u = 0;
            for (int b = 3; b >= 0; --b)
                u = (u << 8) | static_cast<std::uint32_t>(bytes[i * 4 + b]);
            std::memcpy(&values[i], &u, sizeof(T));
        }
    }
    return values;
}

namespace detail {

/// Buffered append-only file writer (POSIX fd so the final fsync is real).
class FileWriter {
public:
    FileWriter(const std::filesystem::path& path, std::size_t buffer_bytes);
    ~FileWriter();
    FileWriter(const FileWriter&) = delete;
    FileWriter& operator=(const FileWriter&) = delete;

    void append(const void* data, std::size_t size);
    void close(bool sync); // flush (+fsync) and close; throws on failure
    std::uint64_t bytes_written() const { return written_ + buffer_.size(); }

private:
    void flush_buffer();

    std::filesystem::path path_;
    int fd_ = -1;
    std::vector<std::byte> buffer_;
    std::size_t capacity_;
    std::uint64_t written_ = 0;
};

} // namespace detail

struct RawFileOptions {
    std::vector<std::pair<std::string, std::string>> provenance;
    bool sync = true;      // fsync the data file in finish()
    bool checksum = true;  // FNV-1a over the byte stream as it is written
};

/// Writes <stem>.raw while lines stream in; on successful finish() writes
/// the <stem>.rvh sidecar. A crashed or failed run therefore leaves a data
/// file without a header, which marks it as partial. Free disk space is
/// checked (best effort) up front.
template <typename T>
class RawFileSink final : public LineSink<T> {
public:
    RawFileSink(const std::filesystem::path& stem, const VoxelGrid& grid,
                RawFileOptions options = {})
        : LineSink<T>(grid), stem_(stem), options_(std::move(options)),
          writer_(data_path(), 4u << 20) {
        std::error_code ec;
        const auto parent = stem_.has_parent_path()
                                ? stem_.parent_path()
                                : std::filesystem::path(".");
        const auto space = std::filesystem::space(parent, ec);
        if (!ec && space.available < grid.byte_count())
            throw std::runtime_error(
                "insufficient free space for " +
                std::to_string(grid.byte_count()) + " bytes at " +
                parent.string());
    }

    std::filesystem::path data_path() const {
        auto p = stem_;
        return p += ".raw";
    }
    std::filesystem::path header_path() const {
        auto p = stem_;
        return p += ".rvh";
    }

protected:
    void do_accept(std::int32_t, std::int32_t,
                   std::span<const T> line) override {
        if constexpr (sizeof(T) == 1 ||
                      std::endian::native == std::endian::little) {
            writer_.append(line.data(), line.size_bytes());
            if (options_.checksum)
                fnv_.update(line.data(), line.size_bytes());
        } else {
            scratch_.clear();
            detail::append_le_bytes(line, scratch_);
            writer_.append(scratch_.data(), scratch_.size());
            if (options_.checksum) fnv_.update(scratch_.data(), scratch_.size());
        }
    }

    void do_finish(SinkSummary& s) override {
        writer_.close(options_.sync);
        RawVolumeInfo info;
        info.grid = this->grid();
        info.data_file = data_path().filename().string();
        info.provenance = options_.provenance;
        write_raw_volume_header(header_path(), info);
        if (options_.checksum) s.checksum = fnv_.digest();
    }

private:
    std::filesystem::path stem_;
    RawFileOptions options_;
    detail::FileWriter writer_;
    Fnv1a64 fnv_;
    std::vector<std::byte> scratch_;
};

/// Random-access volume backed by a memory-mapped file in the .raw layout.
/// For algorithms that write voxels out of stream order. finish() syncs,
/// optionally checksums the mapping, writes the header sidecar and unmaps.
class MappedVolumeFile {
public:
    MappedVolumeFile(const std::filesystem::path& stem, const VoxelGrid& grid);
    ~MappedVolumeFile();
    MappedVolumeFile(const MappedVolumeFile&) = delete;
    MappedVolumeFile& operator=(const MappedVolumeFile&) = delete;

    template <typename T>
    std::span<T> view() {
        static_assert(std::endian::native == std::endian::little,
                      "mapped volumes write raw scalars and require a "
                      "little-endian host");
        if (scalar_traits<T>::kind != grid_.scalar)
            throw std::invalid_argument("mapped view scalar mismatch");
        return {static_cast<T*>(map_), grid_.voxel_count()};
    }

    SinkSummary finish(RawFileOptions options = {});
    const VoxelGrid& grid() const { return grid_; }
    std::filesystem::path data_path() const;
    std::filesystem::path header_path() const;

private:
    std::filesystem::path stem_;
    VoxelGrid grid_;
    int fd_ = -1;
    void* map_ = nullptr;
    std::uint64_t bytes_ = 0;
    bool finished_ = false;
};

/// Best-case writer: |G| copies of one value, in stream order. The line
/// buffer is filled once and re-emitted. Returns the sink's summary.
template <typename T>
SinkSummary write_constant_volume(const VoxelGrid& grid, T value,
                                  LineSink<T>& sink) {
    const std::vector<T> line(static_cast<std::size_t>(grid.dx), value);
    for (std::int32_t z = 0; z < grid.dz; ++z)
        for (std::int32_t y = 0; y < grid.dy; ++y)
            sink.accept_line(z, y, line);
    return sink.finish();
}

} // namespace voxgen
