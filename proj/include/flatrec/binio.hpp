#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "flatrec/error.hpp"

namespace flatrec {

// Little-endian binary writer for artifact files.
class BinWriter {
public:
    explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open for writing: " + path);
        path_ = path;
    }

    void magic(const char (&m)[5]) { out_.write(m, 4); }

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out_.write(reinterpret_cast<const char*>(b), 4);
    }

    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out_.write(reinterpret_cast<const char*>(b), 8);
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }

    void close() {
        out_.close();
        if (!out_) throw Error("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

// Matching reader; every primitive read throws TruncatedError on short files.
class BinReader {
public:
    explicit BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error("cannot open for reading: " + path);
    }

    void expect_magic(const char (&m)[5], const std::string& what) {
        char got[4];
        if (!in_.read(got, 4)) throw TruncatedError(path_ + ": truncated before magic");
        if (std::memcmp(got, m, 4) != 0)
            throw BadMagicError(path_ + ": not a " + what + " file (bad magic)");
    }

    std::uint32_t u32() {
        unsigned char b[4];
        read_raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        read_raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void bytes(void* p, std::size_t n) { read_raw(p, n); }

    bool at_eof() {
        in_.peek();
        return in_.eof();
    }

private:
    void read_raw(void* p, std::size_t n) {
        if (!in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
            throw TruncatedError(path_ + ": truncated");
    }

    std::ifstream in_;
    std::string path_;
};

// FNV-1a 64-bit content hash, used for input fingerprints in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path);  // throws Error if unreadable

}  // namespace flatrec
