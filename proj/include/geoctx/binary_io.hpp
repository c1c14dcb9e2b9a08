#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "geoctx/error.hpp"

namespace geoctx {

// Little-endian primitives shared by the checkpoint and feature cache formats.

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string &path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }

    void bytes(const void *data, std::size_t n) {
        out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v)); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void f64s(std::span<const double> v) {
        for (double x : v) f64(x);
    }
    void str(const std::string &s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }

    void close() {
        out_.flush();
        if (!out_) throw IoError("write to '" + path_ + "' failed");
        out_.close();
    }

private:
    template <typename U>
    void le(U v) {
        unsigned char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, sizeof(U));
    }

    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string &path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path + "' for reading");
    }

    void bytes(void *data, std::size_t n) {
        in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError("unexpected end of file in '" + path_ + "'");
        }
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(le<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    void f64s(std::span<double> v) {
        for (double &x : v) x = f64();
    }
    std::string str(std::size_t max_len = std::size_t{1} << 32) {
        const std::uint64_t n = u64();
        if (n > max_len) throw FormatError("corrupt string length in '" + path_ + "'");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    void expect_magic(const char (&magic)[9]) {
        char buf[8];
        bytes(buf, 8);
        if (std::memcmp(buf, magic, 8) != 0) {
            throw FormatError("'" + path_ + "' is not a " + std::string(magic, 8) + " file");
        }
    }
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    template <typename U>
    U le() {
        unsigned char buf[sizeof(U)];
        bytes(buf, sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
        return v;
    }

    std::string path_;
    std::ifstream in_;
};

}  // namespace geoctx
