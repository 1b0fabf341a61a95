#pragma once

// Stage 1: context formation. The six causal neighbors of a pixel form a
// pattern; color statistics of previously seen patterns are merged into a
// distribution for the current pixel. A hit codes the color directly, a
// miss codes an escape and hands the merged support set to the next stage.

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "scf/entropy.hpp"
#include "scf/image.hpp"
#include "scf/model.hpp"

namespace scf {

// Neighbor order: A=left, B=above-left, C=above, D=above-right,
// E=left-left, F=above-above. Positions outside the image read as (0,0,0).
struct PatternKey {
    std::array<uint32_t, 6> neighbors;
};

inline PatternKey extract_pattern(const Image& img, uint32_t x, uint32_t y) {
    static constexpr std::array<std::pair<int, int>, 6> kOffsets = {{
        {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {-2, 0}, {0, -2},
    }};
    PatternKey key{};
    for (size_t i = 0; i < kOffsets.size(); ++i) {
        const int nx = int(x) + kOffsets[i].first;
        const int ny = int(y) + kOffsets[i].second;
        const bool inside = nx >= 0 && ny >= 0 && nx < int(img.width) && ny < int(img.height);
        key.neighbors[i] = inside ? pack_color(img.at(uint32_t(nx), uint32_t(ny))) : 0;
    }
    return key;
}

// Exact-match context hierarchy over template prefixes of length 6, 4 and 2.
// Longer matches dominate the merged distribution through fixed weights.
class PatternStore {
public:
    static constexpr uint32_t kHistogramRescaleLimit = 1u << 12;
    static constexpr uint32_t kWeight6 = 4;
    static constexpr uint32_t kWeight4 = 2;
    static constexpr uint32_t kWeight2 = 1;

    void merged_into(const PatternKey& key, ColorHistogram& out) const {
        std::array<std::pair<const ColorHistogram*, uint32_t>, 3> parts;
        size_t n = 0;
        if (const auto* h = lookup(level6_, prefix<6>(key))) parts[n++] = {h, kWeight6};
        if (const auto* h = lookup(level4_, prefix<4>(key))) parts[n++] = {h, kWeight4};
        if (const auto* h = lookup(level2_, prefix<2>(key))) parts[n++] = {h, kWeight2};
        switch (n) {
            case 0:
                out.clear();
                return;
            case 1:
                out.assign_scaled(*parts[0].first, parts[0].second);
                return;
            case 2:
                out.assign_merge_scaled(*parts[0].first, parts[0].second, *parts[1].first,
                                        parts[1].second);
                return;
            default: {
                thread_local ColorHistogram scratch;
                scratch.assign_merge_scaled(*parts[0].first, parts[0].second, *parts[1].first,
                                            parts[1].second);
                out.assign_merge_scaled(scratch, 1, *parts[2].first, parts[2].second);
                return;
            }
        }
    }

    void update(const PatternKey& key, Color c) {
        bump(level6_, prefix<6>(key), c, digest6_);
        bump(level4_, prefix<4>(key), c, digest4_);
        bump(level2_, prefix<2>(key), c, digest2_);
    }

    size_t pattern_count() const { return level6_.size() + level4_.size() + level2_.size(); }

    // Order-independent digest per level, maintained incrementally.
    uint64_t digest() const { return digest6_ ^ (digest4_ * 0x9E3779B97F4A7C15ull) ^ (digest2_ * 0xC2B2AE3D27D4EB4Full); }

    void reserve(size_t expected) {
        level6_.reserve(expected);
        level4_.reserve(expected);
        level2_.reserve(expected);
    }

private:
    template <size_t N>
    static std::array<uint32_t, N> prefix(const PatternKey& key) {
        std::array<uint32_t, N> p;
        std::copy_n(key.neighbors.begin(), N, p.begin());
        return p;
    }

    template <size_t N>
    struct ArrayHash {
        size_t operator()(const std::array<uint32_t, N>& a) const {
            detail::Fnv64 f;
            for (uint32_t v : a) f.feed_u32(v);
            return size_t(f.h);
        }
    };

    template <size_t N>
    using LevelMap = std::unordered_map<std::array<uint32_t, N>, ColorHistogram, ArrayHash<N>>;

    template <size_t N>
    static const ColorHistogram* lookup(const LevelMap<N>& map, const std::array<uint32_t, N>& key) {
        const auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    }

    template <size_t N>
    static uint64_t entry_hash(const std::array<uint32_t, N>& key, const ColorHistogram& h) {
        detail::Fnv64 f;
        for (uint32_t v : key) f.feed_u32(v);
        f.feed_u32(h.total());
        for (const auto& e : h.entries()) {
            f.feed_u32(e.color);
            f.feed_u32(e.count);
        }
        return f.h;
    }

    template <size_t N>
    static void bump(LevelMap<N>& map, const std::array<uint32_t, N>& key, Color c,
                     uint64_t& digest) {
        ColorHistogram& h = map[key];
        digest ^= entry_hash(key, h);
        h.bump_capped(pack_color(c), kHistogramRescaleLimit);
        digest ^= entry_hash(key, h);
    }

    LevelMap<6> level6_;
    LevelMap<4> level4_;
    LevelMap<2> level2_;
    uint64_t digest6_ = 0;
    uint64_t digest4_ = 0;
    uint64_t digest2_ = 0;
};

struct Stage1Outcome {
    bool coded = false;
    uint32_t freq = 0;   // slice of the coded symbol (color or escape)
    uint32_t total = 0;  // alphabet total including the escape count
};

// Alphabet: merged colors in histogram order plus a trailing escape symbol
// whose count is the number of distinct colors (PPM-C style). An empty
// merged distribution escapes without emitting anything; both sides can see
// that it is empty.
inline Stage1Outcome stage1_encode(RangeEncoder& enc, const ColorHistogram& merged, Color c) {
    if (merged.empty()) return {};
    const uint32_t escape = merged.distinct();
    const uint32_t total = merged.total() + escape;
    if (const auto slice = merged.locate(pack_color(c))) {
        enc.encode(slice->cum, slice->freq, total);
        return {true, slice->freq, total};
    }
    enc.encode(merged.total(), escape, total);
    return {false, escape, total};
}

inline std::optional<Color> stage1_decode(RangeDecoder& dec, const ColorHistogram& merged) {
    if (merged.empty()) return std::nullopt;
    const uint32_t escape = merged.distinct();
    const uint32_t total = merged.total() + escape;
    const uint32_t target = dec.decode_target(total);
    if (target >= merged.total()) {
        dec.consume(merged.total(), escape, total);
        return std::nullopt;
    }
    ColorHistogram::Slice slice{};
    const auto entry = merged.find_by_cum(target, slice);
    dec.consume(slice.cum, slice.freq, total);
    return unpack_color(entry.color);
}

}  // namespace scf
