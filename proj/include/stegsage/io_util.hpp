#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "stegsage/common.hpp"

namespace stegsage {

// Little-endian binary primitives. Reads throw TruncatedFileError when
// the stream runs dry mid-record, so callers never see partial values.

inline void write_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed");
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_bytes(out, &v, 1); }

inline void write_u16(std::ostream& out, std::uint16_t v) {
    std::uint8_t b[2] = {static_cast<std::uint8_t>(v & 0xff), static_cast<std::uint8_t>(v >> 8)};
    write_bytes(out, b, 2);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
    write_bytes(out, b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
    write_bytes(out, b, 8);
}

inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline void read_bytes(std::istream& in, void* p, size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw TruncatedFileError(std::string("truncated file while reading ") + what);
}

inline std::uint8_t read_u8(std::istream& in, const char* what) {
    std::uint8_t v;
    read_bytes(in, &v, 1, what);
    return v;
}

inline std::uint16_t read_u16(std::istream& in, const char* what) {
    std::uint8_t b[2];
    read_bytes(in, b, 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint8_t b[4];
    read_bytes(in, b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
    std::uint8_t b[8];
    read_bytes(in, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& in, const char* what) {
    std::uint64_t bits = read_u64(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

inline void check_magic(std::istream& in, const char expect[4], const char* format_name) {
    char got[4];
    read_bytes(in, got, 4, "magic");
    if (std::memcmp(got, expect, 4) != 0)
        throw CorruptHeaderError(std::string("bad magic, not a ") + format_name + " file");
}

}  // namespace stegsage
