#pragma once

// Session orchestration: container header, per-pixel stage dispatch, model
// updates, palette-completion tracking and state checksums. Encoder and
// decoder run the same per-pixel sequence against the same adaptive state,
// which is what makes the two sides symmetric.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "scf/entropy.hpp"
#include "scf/image.hpp"
#include "scf/model.hpp"
#include "scf/stage1.hpp"
#include "scf/stage2.hpp"
#include "scf/stage3.hpp"
#include "scf/stats.hpp"

namespace scf {

struct CodecOptions {
    bool palette_reduction = true;   // P: drop stage 1 colors from the stage 2 palette view
    bool residual_reduction = true;  // R: drop palette-implied residuals in stage 3
    bool implicit_flags = true;      // F: stop sending flags once the palette is complete

    friend bool operator==(const CodecOptions&, const CodecOptions&) = default;
};

struct ContainerHeader {
    static constexpr std::array<uint8_t, 4> kMagic = {'S', 'C', 'F', '1'};
    static constexpr uint8_t kVersion = 1;
    static constexpr size_t kSize = 18;

    CodecOptions options;
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t unique_colors = 0;

    void write(std::vector<uint8_t>& out) const {
        out.insert(out.end(), kMagic.begin(), kMagic.end());
        out.push_back(kVersion);
        uint8_t flags = 0;
        if (options.palette_reduction) flags |= 1;
        if (options.residual_reduction) flags |= 2;
        if (options.implicit_flags) flags |= 4;
        out.push_back(flags);
        for (uint32_t v : {width, height, unique_colors})
            for (int s = 0; s < 32; s += 8) out.push_back(uint8_t(v >> s));
    }

    static ContainerHeader parse(std::span<const uint8_t> data) {
        if (data.size() < kSize) throw FormatError("container: truncated header");
        if (!std::equal(kMagic.begin(), kMagic.end(), data.begin()))
            throw FormatError("container: bad magic");
        if (data[4] != kVersion) throw FormatError("container: unsupported version");
        ContainerHeader h;
        h.options.palette_reduction = data[5] & 1;
        h.options.residual_reduction = data[5] & 2;
        h.options.implicit_flags = data[5] & 4;
        auto u32 = [&](size_t at) {
            return uint32_t(data[at]) | uint32_t(data[at + 1]) << 8 |
                   uint32_t(data[at + 2]) << 16 | uint32_t(data[at + 3]) << 24;
        };
        h.width = u32(6);
        h.height = u32(10);
        h.unique_colors = u32(14);
        if (h.width == 0 || h.height == 0) throw FormatError("container: empty raster");
        if (h.unique_colors == 0 || uint64_t(h.unique_colors) > uint64_t(h.width) * h.height)
            throw FormatError("container: implausible unique color count");
        return h;
    }
};

inline uint32_t count_unique_colors(const Image& img) {
    std::unordered_set<uint32_t> seen;
    seen.reserve(img.pixel_count());
    for (uint32_t y = 0; y < img.height; ++y)
        for (uint32_t x = 0; x < img.width; ++x) seen.insert(pack_color(img.at(x, y)));
    return uint32_t(seen.size());
}

// All adaptive state for one image. Nothing is shared across sessions.
struct SessionState {
    explicit SessionState(const ContainerHeader& header)
        : options(header.options), unique_colors(header.unique_colors) {
        error_map.assign(size_t(header.width) * header.height, 0);
        palette.reserve(header.unique_colors);
        patterns.reserve(size_t(header.width) * header.height / 2);
    }

    CodecOptions options;
    uint32_t unique_colors;
    PatternStore patterns;
    Palette palette;
    Stage3Histograms residuals;
    Stage2Models flags;
    std::vector<uint8_t> error_map;
    bool palette_complete = false;

    // per-pixel scratch, reused to keep the hot loop allocation-free
    ColorHistogram merged;
    std::vector<uint32_t> stage1_colors;
    SubPaletteSplit split;
    std::vector<uint8_t> checksum_scratch;

    // Digest over the adaptive model state. Both coder sides must produce
    // the same value after every pixel.
    uint64_t state_checksum() {
        checksum_scratch.clear();
        palette.append_canonical(checksum_scratch);
        for (const auto& h : residuals.channel) h.append_canonical(checksum_scratch);
        flags.in_palette.append_canonical(checksum_scratch);
        flags.sub_palette.append_canonical(checksum_scratch);
        checksum_scratch.push_back(palette_complete ? 1 : 0);
        detail::Fnv64 f;
        f.feed_bytes(checksum_scratch);
        const uint64_t pattern_digest = patterns.digest();
        for (int s = 0; s < 64; s += 8) f.feed(uint8_t(pattern_digest >> s));
        return f.h;
    }
};

namespace detail {

// Shared per-pixel bookkeeping after the pixel's color is settled.
inline void update_models(SessionState& s, const PatternKey& key, Color c, Color predicted,
                          size_t pixel_index, CodingStats* stats,
                          std::vector<uint64_t>* digests) {
    s.patterns.update(key, c);
    s.palette.insert_or_bump(c);
    if (!s.palette_complete && s.palette.size() == s.unique_colors) {
        s.palette_complete = true;
        if (stats) stats->palette_complete_pixel = int64_t(pixel_index);
    }
    s.error_map[pixel_index] = uint8_t(linf_distance(c, predicted));
    if (digests) digests->push_back(s.state_checksum());
}

}  // namespace detail

inline std::vector<uint8_t> encode_image(const Image& img, const CodecOptions& options,
                                         CodingStats* stats = nullptr,
                                         std::vector<uint64_t>* digests = nullptr) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.pixel_count() * 3)
        throw FormatError("encode: empty or inconsistent raster");
    ContainerHeader header;
    header.options = options;
    header.width = img.width;
    header.height = img.height;
    header.unique_colors = count_unique_colors(img);
    if (stats) stats->unique_colors = header.unique_colors;

    SessionState s(header);
    RangeEncoder enc;
    for (uint32_t y = 0; y < img.height; ++y) {
        for (uint32_t x = 0; x < img.width; ++x) {
            const size_t pixel_index = size_t(y) * img.width + x;
            const Color c = img.at(x, y);
            const Color predicted = predict_med(img, x, y);
            const PatternKey key = extract_pattern(img, x, y);
            s.patterns.merged_into(key, s.merged);

            const Stage1Outcome s1 = stage1_encode(enc, s.merged, c);
            if (stats) {
                stats->pixels += 1;
                if (s1.total > 0) stats->stage1_bits += self_information_bits(s1.freq, s1.total);
            }
            if (s1.coded) {
                if (stats) stats->stage1_coded += 1;
            } else {
                if (stats) stats->stage1_escapes += 1;
                s.stage1_colors.clear();
                if (options.palette_reduction)
                    for (const auto& e : s.merged.entries()) s.stage1_colors.push_back(e.color);
                const int radius = compute_radius(s.error_map, img.width, x, y);
                const Stage2Result s2 =
                    stage2_encode(enc, s.palette, s.flags, s.palette_complete,
                                  options.palette_reduction, options.implicit_flags,
                                  s.stage1_colors, predicted, radius, c, s.split, stats);
                if (s2.in_palette) {
                    if (stats) stats->stage2_coded += 1;
                } else {
                    if (s.palette_complete) {
                        if (stats) stats->stage3_after_complete += 1;
                        throw std::logic_error("stage3 reached after palette completion");
                    }
                    if (stats) stats->stage3_coded += 1;
                    stage3_encode(enc, s.residuals, s.palette, predicted, c,
                                  options.residual_reduction, stats);
                }
            }
            detail::update_models(s, key, c, predicted, pixel_index, stats, digests);
        }
    }

    std::vector<uint8_t> container;
    header.write(container);
    const std::vector<uint8_t> payload = enc.finish();
    container.insert(container.end(), payload.begin(), payload.end());
    if (stats) {
        stats->payload_bytes = payload.size();
        stats->container_bytes = container.size();
    }
    return container;
}

inline Image decode_image(std::span<const uint8_t> container, CodingStats* stats = nullptr,
                          std::vector<uint64_t>* digests = nullptr) {
    const ContainerHeader header = ContainerHeader::parse(container);
    const CodecOptions& options = header.options;
    if (stats) stats->unique_colors = header.unique_colors;

    SessionState s(header);
    RangeDecoder dec(container.subspan(ContainerHeader::kSize));
    Image img(header.width, header.height);
    for (uint32_t y = 0; y < header.height; ++y) {
        for (uint32_t x = 0; x < header.width; ++x) {
            const size_t pixel_index = size_t(y) * header.width + x;
            const Color predicted = predict_med(img, x, y);
            const PatternKey key = extract_pattern(img, x, y);
            s.patterns.merged_into(key, s.merged);

            Color c;
            const std::optional<Color> s1 = stage1_decode(dec, s.merged);
            if (stats) stats->pixels += 1;
            if (s1) {
                c = *s1;
                if (stats) stats->stage1_coded += 1;
            } else {
                if (stats) stats->stage1_escapes += 1;
                s.stage1_colors.clear();
                if (options.palette_reduction)
                    for (const auto& e : s.merged.entries()) s.stage1_colors.push_back(e.color);
                const int radius = compute_radius(s.error_map, header.width, x, y);
                const Stage2Result s2 =
                    stage2_decode(dec, s.palette, s.flags, s.palette_complete,
                                  options.palette_reduction, options.implicit_flags,
                                  s.stage1_colors, predicted, radius, s.split, stats);
                if (s2.in_palette) {
                    c = s2.color;
                    if (stats) stats->stage2_coded += 1;
                } else {
                    if (s.palette_complete) {
                        if (stats) stats->stage3_after_complete += 1;
                        throw CorruptStreamError("stage3 requested after palette completion",
                                                 dec.position());
                    }
                    if (stats) stats->stage3_coded += 1;
                    c = stage3_decode(dec, s.residuals, s.palette, predicted,
                                      options.residual_reduction, stats);
                }
            }
            img.set(x, y, c);
            detail::update_models(s, key, c, predicted, pixel_index, stats, digests);
            if (s.palette.size() > header.unique_colors)
                throw CorruptStreamError("palette exceeded declared color count", dec.position());
        }
    }
    if (stats) {
        stats->container_bytes = container.size();
        stats->payload_bytes = container.size() - ContainerHeader::kSize;
    }
    return img;
}

}  // namespace scf
