#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ssfi/error.hpp"

namespace ssfi::binio {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error("unexpected end of file");
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    auto n = read_raw<std::uint32_t>(in);
    if (n > (1u << 20)) throw parse_error("unreasonable string length in binary file");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw io_error("unexpected end of file");
    return s;
}

inline void write_f32s(std::ostream& out, const float* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
}

inline void read_f32s(std::istream& in, float* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 4));
    if (!in) throw io_error("unexpected end of file");
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw parse_error("bad magic, not a " + what + " file");
}

}  // namespace ssfi::binio
