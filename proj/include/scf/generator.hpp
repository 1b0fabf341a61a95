#pragma once

// Deterministic synthetic screen-content rasters for testing and
// benchmarking: glyph-like text, uniform blocks, smooth gradients and
// random noise. All randomness comes from a seeded mt19937_64 drawn with
// rejection sampling, so identical parameters give identical images on
// every platform.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "scf/image.hpp"
#include "scf/model.hpp"

namespace scf {

enum class GenKind { text, blocks, gradient, noise };

inline GenKind gen_kind_from_name(const std::string& name) {
    if (name == "text") return GenKind::text;
    if (name == "blocks") return GenKind::blocks;
    if (name == "gradient") return GenKind::gradient;
    if (name == "noise") return GenKind::noise;
    throw std::invalid_argument("unknown generator kind: " + name);
}

struct GenSpec {
    GenKind kind = GenKind::text;
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t colors = 0;  // 0 = kind default; for noise, 0 means unrestricted
    uint64_t seed = 0;
};

namespace detail {

inline uint64_t rng_below(std::mt19937_64& rng, uint64_t bound) {
    if (bound <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

inline std::vector<uint32_t> distinct_colors(std::mt19937_64& rng, uint32_t k) {
    std::unordered_set<uint32_t> seen;
    std::vector<uint32_t> palette;
    palette.reserve(k);
    while (palette.size() < k) {
        const uint32_t c = uint32_t(rng_below(rng, 1u << 24));
        if (seen.insert(c).second) palette.push_back(c);
    }
    return palette;
}

inline Image gen_blocks(const GenSpec& spec, std::mt19937_64& rng, uint32_t k) {
    // rectangle grid; the first k cells cover the palette so exactly k
    // distinct colors appear
    Image img(spec.width, spec.height);
    const auto palette = distinct_colors(rng, k);
    uint32_t cell = 1;
    while (uint64_t(cell + 1) * (cell + 1) * k <= uint64_t(spec.width) * spec.height &&
           cell < 64)
        ++cell;
    const uint32_t cols = (spec.width + cell - 1) / cell;
    const uint32_t rows = (spec.height + cell - 1) / cell;
    std::vector<uint32_t> cell_color(size_t(cols) * rows);
    for (size_t i = 0; i < cell_color.size(); ++i)
        cell_color[i] = i < k ? palette[i] : palette[rng_below(rng, k)];
    for (uint32_t y = 0; y < spec.height; ++y)
        for (uint32_t x = 0; x < spec.width; ++x)
            img.set(x, y, unpack_color(cell_color[size_t(y / cell) * cols + x / cell]));
    return img;
}

inline Image gen_gradient(const GenSpec& spec, std::mt19937_64& rng, uint32_t k) {
    // bilinear ramp between four random corners, quantized per channel so
    // the number of distinct colors stays near the requested count
    Image img(spec.width, spec.height);
    uint32_t levels = 1;
    while (uint64_t(levels + 1) * (levels + 1) * (levels + 1) <= k && levels < 256) ++levels;
    std::array<std::array<uint8_t, 3>, 4> corner{};
    for (auto& c : corner)
        for (auto& ch : c) ch = uint8_t(rng_below(rng, 256));
    const double wmax = spec.width > 1 ? double(spec.width - 1) : 1.0;
    const double hmax = spec.height > 1 ? double(spec.height - 1) : 1.0;
    for (uint32_t y = 0; y < spec.height; ++y) {
        const double ty = double(y) / hmax;
        for (uint32_t x = 0; x < spec.width; ++x) {
            const double tx = double(x) / wmax;
            Color c;
            uint8_t* ch[3] = {&c.r, &c.g, &c.b};
            for (int i = 0; i < 3; ++i) {
                const double top = corner[0][i] * (1 - tx) + corner[1][i] * tx;
                const double bot = corner[2][i] * (1 - tx) + corner[3][i] * tx;
                const double v = top * (1 - ty) + bot * ty;
                const uint32_t q = uint32_t(v * levels / 256.0);
                *ch[i] = uint8_t(std::min(q * 256 / levels, 255u));
            }
            img.set(x, y, c);
        }
    }
    return img;
}

inline Image gen_noise(const GenSpec& spec, std::mt19937_64& rng, uint32_t k) {
    Image img(spec.width, spec.height);
    if (k == 0) {
        for (uint32_t y = 0; y < spec.height; ++y)
            for (uint32_t x = 0; x < spec.width; ++x)
                img.set(x, y, unpack_color(uint32_t(rng_below(rng, 1u << 24))));
        return img;
    }
    const auto palette = distinct_colors(rng, k);
    for (uint32_t y = 0; y < spec.height; ++y)
        for (uint32_t x = 0; x < spec.width; ++x)
            img.set(x, y, unpack_color(palette[rng_below(rng, k)]));
    return img;
}

inline Image gen_text(const GenSpec& spec, std::mt19937_64& rng, uint32_t k) {
    // rows of repeated glyph bitmaps over a flat background; foreground
    // colors cycle through the palette so busy pages become palette-heavy
    constexpr uint32_t kGlyphW = 5, kGlyphH = 7, kPitchX = 6, kPitchY = 9;
    Image img(spec.width, spec.height);
    const auto palette = distinct_colors(rng, k);
    const Color bg = unpack_color(palette[0]);
    for (uint32_t y = 0; y < spec.height; ++y)
        for (uint32_t x = 0; x < spec.width; ++x) img.set(x, y, bg);
    if (k == 1) return img;

    const uint32_t glyph_count = 32;
    std::vector<std::array<uint8_t, kGlyphH>> glyphs(glyph_count);
    for (auto& g : glyphs)
        for (auto& row : g) row = uint8_t(rng_below(rng, 32));  // 5-bit rows

    // short repeating vocabulary of glyph sequences, like words on a page
    std::vector<std::vector<uint32_t>> words;
    auto new_word = [&] {
        std::vector<uint32_t> w(1 + rng_below(rng, 7));
        for (auto& g : w) g = uint32_t(rng_below(rng, glyph_count));
        words.push_back(w);
        return words.size() - 1;
    };

    uint64_t word_serial = 0;
    for (uint32_t line_y = 1; line_y + kGlyphH <= spec.height; line_y += kPitchY) {
        uint32_t pen_x = 1;
        while (pen_x + kGlyphW <= spec.width) {
            const size_t wi = (words.empty() || rng_below(rng, 10) < 3)
                                  ? new_word()
                                  : size_t(rng_below(rng, words.size()));
            const Color fg =
                unpack_color(palette[1 + (word_serial * 131) % (k - 1)]);
            ++word_serial;
            for (uint32_t g : words[wi]) {
                if (pen_x + kGlyphW > spec.width) break;
                for (uint32_t gy = 0; gy < kGlyphH; ++gy)
                    for (uint32_t gx = 0; gx < kGlyphW; ++gx)
                        if ((glyphs[g][gy] >> gx) & 1) img.set(pen_x + gx, line_y + gy, fg);
                pen_x += kPitchX;
            }
            pen_x += kPitchX;  // word gap
        }
    }
    return img;
}

}  // namespace detail

inline Image generate_image(const GenSpec& spec) {
    if (spec.width == 0 || spec.height == 0)
        throw std::invalid_argument("generator: empty raster");
    uint32_t k = spec.colors;
    if (k == 0 && spec.kind != GenKind::noise) k = 16;
    if (uint64_t(k) > uint64_t(spec.width) * spec.height)
        throw std::invalid_argument("generator: more colors than pixels");
    if (k > (1u << 24)) throw std::invalid_argument("generator: more colors than RGB triples");
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull +
                        uint64_t(spec.kind) * 977);
    switch (spec.kind) {
        case GenKind::blocks:
            return detail::gen_blocks(spec, rng, std::max(k, 1u));
        case GenKind::gradient:
            return detail::gen_gradient(spec, rng, std::max(k, 1u));
        case GenKind::noise:
            return detail::gen_noise(spec, rng, k);
        case GenKind::text:
            return detail::gen_text(spec, rng, std::max(k, 1u));
    }
    throw std::logic_error("generator: unreachable");
}

}  // namespace scf
