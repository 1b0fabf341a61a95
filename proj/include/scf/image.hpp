#pragma once

// 8-bit RGB raster plus PPM (P6) ingestion and export.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scf/model.hpp"

namespace scf {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Image {
    uint32_t width = 0;
    uint32_t height = 0;
    std::vector<uint8_t> pixels;  // interleaved RGB, row-major

    Image() = default;
    Image(uint32_t w, uint32_t h) : width(w), height(h), pixels(size_t(w) * h * 3, 0) {}

    size_t pixel_count() const { return size_t(width) * height; }

    Color at(uint32_t x, uint32_t y) const {
        const size_t i = (size_t(y) * width + x) * 3;
        return Color{pixels[i], pixels[i + 1], pixels[i + 2]};
    }

    void set(uint32_t x, uint32_t y, Color c) {
        const size_t i = (size_t(y) * width + x) * 3;
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

namespace detail {

// Reads one PPM header token, skipping whitespace and '#' comments.
inline std::string ppm_token(std::span<const uint8_t> data, size_t& pos) {
    while (pos < data.size()) {
        const char c = char(data[pos]);
        if (c == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])))
        token.push_back(char(data[pos++]));
    if (token.empty()) throw FormatError("PPM: unexpected end of header");
    return token;
}

inline uint32_t ppm_number(std::span<const uint8_t> data, size_t& pos, const char* what) {
    const std::string token = ppm_token(data, pos);
    uint64_t value = 0;
    for (char c : token) {
        if (c < '0' || c > '9') throw FormatError(std::string("PPM: bad ") + what);
        value = value * 10 + uint64_t(c - '0');
        if (value > 0xFFFFFFFFull) throw FormatError(std::string("PPM: ") + what + " out of range");
    }
    return uint32_t(value);
}

}  // namespace detail

inline Image parse_ppm(std::span<const uint8_t> data) {
    size_t pos = 0;
    if (detail::ppm_token(data, pos) != "P6")
        throw FormatError("PPM: not a binary P6 file");
    const uint32_t width = detail::ppm_number(data, pos, "width");
    const uint32_t height = detail::ppm_number(data, pos, "height");
    const uint32_t maxval = detail::ppm_number(data, pos, "maxval");
    if (width == 0 || height == 0) throw FormatError("PPM: empty raster");
    if (maxval == 0 || maxval > 255)
        throw FormatError("PPM: only 8-bit samples are supported (maxval 1..255)");
    ++pos;  // single whitespace after maxval
    const size_t need = size_t(width) * height * 3;
    if (data.size() - pos < need) throw FormatError("PPM: truncated pixel data");
    Image img(width, height);
    std::copy_n(data.begin() + pos, need, img.pixels.begin());
    return img;
}

inline Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return parse_ppm(data);
}

inline void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace scf
