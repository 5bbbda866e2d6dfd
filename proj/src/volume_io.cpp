// SPDX-License-Identifier: Apache-2.0
#include "voxgen/volume_io.hpp"

#include <cerrno>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

namespace voxgen {

namespace detail {

FileWriter::FileWriter(const std::filesystem::path& path,
                       std::size_t buffer_bytes)
    : path_(path), capacity_(buffer_bytes) {
    fd_ = ::open(path.c_str(), O_CREAT | O_TRUNC | O_WRONLY | O_CLOEXEC, 0644);
    if (fd_ < 0)
        throw std::system_error(errno, std::generic_category(),
                                "open " + path.string());
    buffer_.reserve(capacity_);
}

FileWriter::~FileWriter() {
    if (fd_ >= 0) ::close(fd_);
}

void FileWriter::flush_buffer() {
    const std::byte* p = buffer_.data();
    std::size_t left = buffer_.size();
    while (left > 0) {
        const ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::system_error(errno, std::generic_category(),
                                    "write " + path_.string() + " (after " +
                                        std::to_string(written_) + " bytes)");
        }
        p += n;
        left -= static_cast<std::size_t>(n);
        written_ += static_cast<std::uint64_t>(n);
    }
    buffer_.clear();
}

void FileWriter::append(const void* data, std::size_t size) {
    const std::byte* p = static_cast<const std::byte*>(data);
    while (size > 0) {
        const std::size_t room = capacity_ - buffer_.size();
        const std::size_t take = std::min(room, size);
        buffer_.insert(buffer_.end(), p, p + take);
        p += take;
        size -= take;
        if (buffer_.size() == capacity_) flush_buffer();
    }
}

void FileWriter::close(bool sync) {
    flush_buffer();
    if (sync && ::fsync(fd_) != 0)
        throw std::system_error(errno, std::generic_category(),
                                "fsync " + path_.string());
    if (::close(fd_) != 0) {
        fd_ = -1;
        throw std::system_error(errno, std::generic_category(),
                                "close " + path_.string());
    }
    fd_ = -1;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(size));
    if (!in) throw std::runtime_error("short read from " + path.string());
    return bytes;
}

} // namespace detail

void write_raw_volume_header(const std::filesystem::path& header_path,
                             const RawVolumeInfo& info) {
    std::ostringstream out;
    out << "dims: " << info.grid.dx << ' ' << info.grid.dy << ' '
        << info.grid.dz << '\n';
    out << "scalar: " << scalar_name(info.grid.scalar) << '\n';
    out << "endianness: little\n";
    out << "data: " << info.data_file << '\n';
    for (const auto& [key, value] : info.provenance)
        out << key << ": " << value << '\n';

    std::ofstream f(header_path);
    if (!f) throw std::runtime_error("cannot open " + header_path.string());
    f << out.str();
    f.flush();
    if (!f) throw std::runtime_error("failed writing " + header_path.string());
}

RawVolumeInfo read_raw_volume_header(const std::filesystem::path& header_path) {
    std::ifstream f(header_path);
    if (!f) throw std::runtime_error("cannot open " + header_path.string());

    RawVolumeInfo info;
    bool have_dims = false, have_scalar = false, have_data = false;
    std::int32_t dx = 0, dy = 0, dz = 0;
    ScalarKind scalar = ScalarKind::U8;

    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error(header_path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected 'key: value'");
        const std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);

        if (key == "dims") {
            std::istringstream v(value);
            if (!(v >> dx >> dy >> dz))
                throw std::runtime_error(header_path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": bad dims '" + value + "'");
            have_dims = true;
        } else if (key == "scalar") {
            scalar = parse_scalar_kind(value);
            have_scalar = true;
        } else if (key == "endianness") {
            if (value != "little")
                throw std::runtime_error(header_path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": unsupported endianness '" + value +
                                         "'");
        } else if (key == "data") {
            info.data_file = value;
            have_data = true;
        } else {
            info.provenance.emplace_back(key, value);
        }
    }
    if (!have_dims || !have_scalar || !have_data)
        throw std::runtime_error(header_path.string() +
                                 ": missing dims, scalar or data key");
    info.grid = VoxelGrid(dx, dy, dz, scalar);
    return info;
}

std::filesystem::path resolve_raw_data_file(
    const std::filesystem::path& header_path, const RawVolumeInfo& info) {
    const auto data_path = header_path.parent_path() / info.data_file;
    std::error_code ec;
    const auto size = std::filesystem::file_size(data_path, ec);
    if (ec)
        throw std::runtime_error("cannot stat " + data_path.string() + ": " +
                                 ec.message());
    if (size != info.grid.byte_count())
        throw std::runtime_error(
            data_path.string() + " is " + std::to_string(size) +
            " bytes, header expects " + std::to_string(info.grid.byte_count()));
    return data_path;
}

MappedVolumeFile::MappedVolumeFile(const std::filesystem::path& stem,
                                   const VoxelGrid& grid)
    : stem_(stem), grid_(grid), bytes_(grid.byte_count()) {
    fd_ = ::open(data_path().c_str(), O_CREAT | O_TRUNC | O_RDWR | O_CLOEXEC,
                 0644);
    if (fd_ < 0)
        throw std::system_error(errno, std::generic_category(),
                                "open " + data_path().string());
    if (::ftruncate(fd_, static_cast<off_t>(bytes_)) != 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw std::system_error(err, std::generic_category(),
                                "ftruncate " + data_path().string());
    }
    map_ = ::mmap(nullptr, bytes_, PROT_READ | PROT_WRITE, MAP_SHARED, fd_, 0);
    if (map_ == MAP_FAILED) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        map_ = nullptr;
        throw std::system_error(err, std::generic_category(),
                                "mmap " + data_path().string());
    }
}

MappedVolumeFile::~MappedVolumeFile() {
    if (map_) ::munmap(map_, bytes_);
    if (fd_ >= 0) ::close(fd_);
}

std::filesystem::path MappedVolumeFile::data_path() const {
    auto p = stem_;
    return p += ".raw";
}

std::filesystem::path MappedVolumeFile::header_path() const {
    auto p = stem_;
    return p += ".rvh";
}

SinkSummary MappedVolumeFile::finish(RawFileOptions options) {
    if (finished_) throw std::logic_error("finish called twice");
    if (options.sync && ::msync(map_, bytes_, MS_SYNC) != 0)
        throw std::system_error(errno, std::generic_category(),
                                "msync " + data_path().string());
    SinkSummary s;
    s.voxels = grid_.voxel_count();
    s.lines = grid_.line_count();
    s.bytes = bytes_;
    if (options.checksum) {
        Fnv1a64 fnv;
        fnv.update(map_, bytes_);
        s.checksum = fnv.digest();
    }
    ::munmap(map_, bytes_);
    map_ = nullptr;
    if (options.sync && ::fsync(fd_) != 0)
        throw std::system_error(errno, std::generic_category(),
                                "fsync " + data_path().string());
    ::close(fd_);
    fd_ = -1;

    RawVolumeInfo info;
    info.grid = grid_;
    info.data_file = data_path().filename().string();
    info.provenance = std::move(options.provenance);
    write_raw_volume_header(header_path(), info);
    finished_ = true;
    return s;
}

} // namespace voxgen
