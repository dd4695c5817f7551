#pragma once

// Little-endian primitives shared by the feature and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "osc/errors.hpp"

namespace osc::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void f32(float v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void magic(const char (&m)[5]) { bytes(m, 4); }

    void write_to(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(FormatError::Code::Io, "cannot open " + path.string() + " for writing");
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw FormatError(FormatError::Code::Io, "failed writing " + path.string());
    }

private:
    std::vector<unsigned char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError(FormatError::Code::Io, "cannot open " + path_);
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    void bytes(void* out, std::size_t n) {
        if (remaining() < n)
            throw FormatError(FormatError::Code::Truncated, path_ + ": unexpected end of file");
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, sizeof v); return v; }
    float f32() { float v; bytes(&v, sizeof v); return v; }
    double f64() { double v; bytes(&v, sizeof v); return v; }

    void expect_magic(const char (&m)[5]) {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw FormatError(FormatError::Code::BadMagic,
                              path_ + ": bad magic '" + std::string(got, 4) + "', expected '" + m + "'");
    }

    std::size_t remaining() const noexcept { return buf_.size() - pos_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

}  // namespace osc::detail
