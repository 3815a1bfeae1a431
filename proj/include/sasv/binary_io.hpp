#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "sasv/common.hpp"

/// Little-endian primitives for the binary model files; explicit byte order
/// keeps the files portable across hosts.
namespace sasv::binary {

inline void put_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    put_bytes(os, b, 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(os, b, 8);
}

inline void put_i32(std::ostream& os, std::int32_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    put_bytes(os, s.data(), s.size());
}

inline void get_bytes(std::istream& is, void* data, std::size_t n,
                      const std::filesystem::path& path) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        fail(Errc::io_error, "truncated file: " + path.string());
}

inline std::uint8_t get_u8(std::istream& is, const std::filesystem::path& path) {
    std::uint8_t v;
    get_bytes(is, &v, 1, path);
    return v;
}

inline std::uint16_t get_u16(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[2];
    get_bytes(is, b, 2, path);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    get_bytes(is, b, 4, path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[8];
    get_bytes(is, b, 8, path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline std::int32_t get_i32(std::istream& is, const std::filesystem::path& path) {
    return static_cast<std::int32_t>(get_u32(is, path));
}

inline double get_f64(std::istream& is, const std::filesystem::path& path) {
    const std::uint64_t bits = get_u64(is, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string get_string(std::istream& is, const std::filesystem::path& path) {
    const std::uint32_t n = get_u32(is, path);
    std::string s(n, '\0');
    if (n > 0) get_bytes(is, s.data(), n, path);
    return s;
}

}  // namespace sasv::binary
