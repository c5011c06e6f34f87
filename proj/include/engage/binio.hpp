#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace engage::binio {

// All on-disk integers and floats are little-endian, written bytewise so the
// formats do not depend on host endianness.

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline void write_f64(std::ostream& out, double d) {
    write_u64(out, std::bit_cast<std::uint64_t>(d));
}

// Readers return false on EOF before any byte; a partial value is reported
// the same way (caller decides whether that means truncation).

inline bool read_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        return false;
    v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

inline bool read_u64(std::istream& in, std::uint64_t& v) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        return false;
    v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

inline bool read_f64(std::istream& in, double& d) {
    std::uint64_t v;
    if (!read_u64(in, v))
        return false;
    d = std::bit_cast<double>(v);
    return true;
}

inline bool read_magic(std::istream& in, const std::string& expected) {
    std::string got(expected.size(), '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(got.size())))
        return false;
    return got == expected;
}

}  // namespace engage::binio
