#pragma once

// Stage 2: palette coding. The palette (minus the colors already ruled out
// by stage 1 when reduction is enabled) is split into a sub-palette within
// an L-infinity radius of the predicted color and the rest; a flag selects
// the sub-palette and the color is coded by its palette counts. Flags whose
// value both sides can derive are not transmitted, but still step their
// models so every toggle variant sees identical statistics.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "scf/entropy.hpp"
#include "scf/model.hpp"
#include "scf/stats.hpp"

namespace scf {

// Radius from the neighbors' prediction errors; missing neighbors count as 0.
inline int compute_radius(const std::vector<uint8_t>& error_map, uint32_t width, uint32_t x,
                          uint32_t y) {
    const size_t idx = size_t(y) * width + x;
    const int e_left = x > 0 ? error_map[idx - 1] : 0;
    const int e_above = y > 0 ? error_map[idx - width] : 0;
    const int radius = (e_left + e_above + 1) / 2 + 1;
    return std::clamp(radius, 1, 255);
}

// Survivors of the exclusion view partitioned by the radius, each side kept
// as palette positions plus running cumulative counts (cums[i] is the mass
// before the i-th member, cums.back() the side's total).
struct SubPaletteSplit {
    std::vector<uint32_t> near_positions;
    std::vector<uint32_t> near_cums;
    std::vector<uint32_t> far_positions;
    std::vector<uint32_t> far_cums;
    // Mass the exclusion removed from each side; needed to compare the
    // reduced index cost against what the unreduced split would have cost.
    uint32_t excluded_near_mass = 0;
    uint32_t excluded_far_mass = 0;

    uint32_t near_total() const { return near_cums.back(); }
    uint32_t far_total() const { return far_cums.back(); }

    void clear() {
        near_positions.clear();
        far_positions.clear();
        near_cums.assign(1, 0);
        far_cums.assign(1, 0);
        excluded_near_mass = excluded_far_mass = 0;
    }
};

inline void split_palette(const PaletteExclusionView& view, Color predicted, int radius,
                          SubPaletteSplit& out) {
    const Palette& palette = view.base();
    const uint32_t n = palette.size();
    out.clear();
    out.near_positions.resize(n);
    out.near_cums.resize(n + 1);
    out.far_positions.resize(n);
    out.far_cums.resize(n + 1);
    const uint32_t* colors = palette.colors().data();
    const uint32_t* counts = palette.counts().data();
    const uint32_t* next_excluded = view.excluded_positions().data();
    const uint32_t* end_excluded = next_excluded + view.excluded_positions().size();
    uint32_t* near_pos = out.near_positions.data();
    uint32_t* near_cum = out.near_cums.data() + 1;
    uint32_t* far_pos = out.far_positions.data();
    uint32_t* far_cum = out.far_cums.data() + 1;
    uint32_t near_run = 0, far_run = 0;
    for (uint32_t pos = 0; pos < n; ++pos) {
        const uint32_t count = counts[pos];
        const bool near = linf_distance(unpack_color(colors[pos]), predicted) <= radius;
        if (next_excluded != end_excluded && *next_excluded == pos) {
            ++next_excluded;
            (near ? out.excluded_near_mass : out.excluded_far_mass) += count;
        } else if (near) {
            *near_pos++ = pos;
            *near_cum++ = near_run += count;
        } else {
            *far_pos++ = pos;
            *far_cum++ = far_run += count;
        }
    }
    out.near_positions.resize(size_t(near_pos - out.near_positions.data()));
    out.near_cums.resize(out.near_positions.size() + 1);
    out.far_positions.resize(size_t(far_pos - out.far_positions.data()));
    out.far_cums.resize(out.far_positions.size() + 1);
}

struct Stage2Models {
    AdaptiveBit in_palette;
    AdaptiveBit sub_palette;
};

struct Stage2Result {
    bool in_palette = false;
    Color color{};
};

namespace detail {

inline void record_index_event(CodingStats* stats, bool reduced, uint32_t freq,
                               uint32_t chosen_total, uint32_t excluded_same_side) {
    if (!stats) return;
    stats->stage2_bits += self_information_bits(freq, chosen_total);
    if (!reduced) return;
    const double margin = self_information_bits(freq, chosen_total + excluded_same_side) -
                          self_information_bits(freq, chosen_total);
    stats->reduction_events_stage2 += 1;
    stats->reduction_margin_stage2 += margin;
    stats->min_margin_stage2 = std::min(stats->min_margin_stage2, margin);
    if (excluded_same_side > 0) stats->reduction_strict_stage2 += 1;
}

}  // namespace detail

// stage1_exclusions must be the sorted packed colors of the stage 1
// distribution when reduction is enabled, or empty when it is not.
inline Stage2Result stage2_encode(RangeEncoder& enc, const Palette& palette,
                                  Stage2Models& models, bool palette_complete,
                                  bool reduce, bool elide_known_flags,
                                  std::span<const uint32_t> stage1_exclusions, Color predicted,
                                  int radius, Color c, SubPaletteSplit& split,
                                  CodingStats* stats) {
    const PaletteExclusionView view(palette, stage1_exclusions);
    const auto pos = palette.lookup(c);
    const bool in_palette = pos.has_value();
    if (in_palette && view.excludes(pack_color(c)))
        throw std::logic_error("stage2: color was in the stage 1 distribution");

    if (palette_complete && elide_known_flags) {
        assert(in_palette);
        if (stats) {
            stats->implied_in_palette_true += 1;
            stats->flag_bits_saved += models.in_palette.cost_bits(true);
        }
        models.in_palette.update(true);
    } else if (view.total() == 0) {
        assert(!in_palette);
        models.in_palette.update(false);
        if (stats) stats->implied_in_palette_false += 1;
        return {};
    } else {
        if (stats) {
            stats->in_palette_flags_coded += 1;
            stats->in_palette_flag_bits += models.in_palette.cost_bits(in_palette);
        }
        models.in_palette.encode(enc, in_palette);
        if (!in_palette) return {};
    }

    split_palette(view, predicted, radius, split);
    const bool use_near = linf_distance(c, predicted) <= radius;
    if (split.near_total() == 0 || split.far_total() == 0) {
        assert(use_near == (split.far_total() == 0));
        models.sub_palette.update(use_near);
        if (stats) stats->implied_sub_palette += 1;
    } else {
        if (stats) {
            stats->sub_palette_flags_coded += 1;
            stats->sub_palette_flag_bits += models.sub_palette.cost_bits(use_near);
        }
        models.sub_palette.encode(enc, use_near);
    }

    const auto& positions = use_near ? split.near_positions : split.far_positions;
    const auto& cums = use_near ? split.near_cums : split.far_cums;
    const uint32_t chosen_total = use_near ? split.near_total() : split.far_total();
    const auto it = std::lower_bound(positions.begin(), positions.end(), *pos);
    assert(it != positions.end() && *it == *pos);
    const size_t rank = size_t(it - positions.begin());
    const uint32_t freq = cums[rank + 1] - cums[rank];
    enc.encode(cums[rank], freq, chosen_total);
    detail::record_index_event(stats, reduce, freq, chosen_total,
                               use_near ? split.excluded_near_mass : split.excluded_far_mass);
    return {true, c};
}

inline Stage2Result stage2_decode(RangeDecoder& dec, const Palette& palette,
                                  Stage2Models& models, bool palette_complete,
                                  bool reduce, bool elide_known_flags,
                                  std::span<const uint32_t> stage1_exclusions, Color predicted,
                                  int radius, SubPaletteSplit& split, CodingStats* stats) {
    const PaletteExclusionView view(palette, stage1_exclusions);

    bool in_palette;
    if (palette_complete && elide_known_flags) {
        in_palette = true;
        if (stats) {
            stats->implied_in_palette_true += 1;
            stats->flag_bits_saved += models.in_palette.cost_bits(true);
        }
        models.in_palette.update(true);
    } else if (view.total() == 0) {
        in_palette = false;
        models.in_palette.update(false);
        if (stats) stats->implied_in_palette_false += 1;
    } else {
        if (stats) stats->in_palette_flags_coded += 1;
        in_palette = models.in_palette.decode(dec);
    }
    if (!in_palette) return {};

    split_palette(view, predicted, radius, split);
    bool use_near;
    if (split.near_total() == 0 && split.far_total() == 0)
        throw CorruptStreamError("stage2: no palette colors available", dec.position());
    if (split.near_total() == 0 || split.far_total() == 0) {
        use_near = split.far_total() == 0;
        models.sub_palette.update(use_near);
        if (stats) stats->implied_sub_palette += 1;
    } else {
        if (stats) stats->sub_palette_flags_coded += 1;
        use_near = models.sub_palette.decode(dec);
    }

    const auto& positions = use_near ? split.near_positions : split.far_positions;
    const auto& cums = use_near ? split.near_cums : split.far_cums;
    const uint32_t chosen_total = use_near ? split.near_total() : split.far_total();
    const uint32_t target = dec.decode_target(chosen_total);
    const size_t rank =
        size_t(std::upper_bound(cums.begin(), cums.end(), target) - cums.begin()) - 1;
    assert(rank < positions.size());
    const uint32_t freq = cums[rank + 1] - cums[rank];
    dec.consume(cums[rank], freq, chosen_total);
    detail::record_index_event(stats, reduce, freq, chosen_total,
                               use_near ? split.excluded_near_mass : split.excluded_far_mass);
    return {true, palette.color_at(positions[rank])};
}

}  // namespace scf
