#ifndef BIPHOTON_SRC_BINARY_IO_HPP
#define BIPHOTON_SRC_BINARY_IO_HPP

// Explicit little-endian encoding, independent of host byte order.

#include "biphoton/errors.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace biphoton::detail {

template <typename U>
void put_le(std::ostream& out, U value)
{
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    }
    out.write(bytes, sizeof(U));
}

inline void put_f64(std::ostream& out, double v)
{
    put_le(out, std::bit_cast<std::uint64_t>(v));
}

template <typename U>
U get_le(std::istream& in, const char* what)
{
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
        throw FormatError(std::string("truncated file while reading ") + what);
    }
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(bytes[i]) << (8 * i);
    }
    return value;
}

inline double get_f64(std::istream& in, const char* what)
{
    return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& path)
{
    char got[4] = {};
    if (!in.read(got, 4) || std::string(got, 4) != std::string(magic, 4)) {
        throw FormatError(path + ": bad magic, expected " + std::string(magic, 4));
    }
}

}  // namespace biphoton::detail

#endif  // BIPHOTON_SRC_BINARY_IO_HPP
