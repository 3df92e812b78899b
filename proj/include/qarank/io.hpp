#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

namespace qarank::io {

/// Whole-file read. Throws FileNotFound / IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers
/// never observe a half-written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Little-endian encoders for the binary index files.
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xFF));
    }
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int shift = 0; shift < 64; shift += 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xFF));
    }
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(out, bits);
}

/// Bounds-checked little-endian cursor over a byte buffer. Reads past the
/// end throw MalformedFormat naming `source`.
class ByteReader {
  public:
    ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string_view bytes(std::size_t n);

    bool at_end() const noexcept { return pos_ == data_.size(); }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

  private:
    void need(std::size_t n) const;

    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace qarank::io
