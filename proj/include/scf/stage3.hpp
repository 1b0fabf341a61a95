#pragma once

// Stage 3: first-occurrence colors. Each channel is predicted with a median
// adaptive predictor and the wrapped prediction error is coded against a
// persistent per-channel histogram. For the final channel, palette colors
// matching the two channels already coded map to residuals that cannot
// occur; with reduction enabled those are dropped from the distribution.

#include <array>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scf/entropy.hpp"
#include "scf/image.hpp"
#include "scf/model.hpp"
#include "scf/stats.hpp"

namespace scf {

inline uint8_t med_predict_channel(int a, int b, int c) {
    const int mx = std::max(a, b);
    const int mn = std::min(a, b);
    if (c <= mn) return uint8_t(mx);
    if (c >= mx) return uint8_t(mn);
    return uint8_t(std::clamp(a + b - c, 0, 255));
}

// Per-channel MED over left/above/above-left. First row falls back to the
// left neighbor, first column to the above neighbor, and the very first
// pixel to mid-range.
inline Color predict_med(const Image& img, uint32_t x, uint32_t y) {
    if (x == 0 && y == 0) return Color{128, 128, 128};
    if (y == 0) return img.at(x - 1, y);
    if (x == 0) return img.at(x, y - 1);
    const Color a = img.at(x - 1, y);
    const Color b = img.at(x, y - 1);
    const Color c = img.at(x - 1, y - 1);
    return Color{
        med_predict_channel(a.r, b.r, c.r),
        med_predict_channel(a.g, b.g, c.g),
        med_predict_channel(a.b, b.b, c.b),
    };
}

// Wrapped prediction error; bijective in the actual value for a fixed
// prediction, so distinct colors always map to distinct residual symbols.
inline uint8_t error_symbol(uint8_t predicted, uint8_t actual) {
    return uint8_t(predicted - actual);
}

inline uint8_t reconstruct_from_error(uint8_t predicted, uint8_t sym) {
    return uint8_t(predicted - sym);
}

// 256-bit membership mask over residual symbols.
struct ResidualExclusion {
    std::array<uint64_t, 4> words{};

    void add(uint8_t sym) { words[sym >> 6] |= 1ull << (sym & 63); }
    bool contains(uint8_t sym) const { return (words[sym >> 6] >> (sym & 63)) & 1; }
    bool any() const { return words[0] | words[1] | words[2] | words[3]; }
};

// Residual symbols of palette colors whose first two channels equal the
// values already coded for this pixel. Only those could collide with the
// final channel, and none of them can be the true symbol here.
inline ResidualExclusion final_channel_exclusion(const Palette& palette, uint8_t ch0, uint8_t ch1,
                                                 uint8_t predicted_final) {
    ResidualExclusion excl;
    for (uint32_t pos : palette.positions_with_rg(ch0, ch1))
        excl.add(error_symbol(predicted_final, uint8_t(palette.packed_at(pos))));
    return excl;
}

// Persistent residual histogram for one channel. Every symbol keeps a count
// of at least one so any residual stays codable; totals rescale at 2^16.
class ErrorHistogram {
public:
    static constexpr uint32_t kRescaleLimit = 1u << 16;

    ErrorHistogram() {
        counts_.fill(1);
        total_ = 256;
    }

    uint32_t total() const { return total_; }
    uint32_t count(uint8_t sym) const { return counts_[sym]; }

    void bump(uint8_t sym) {
        counts_[sym] += 1;
        total_ += 1;
        if (total_ > kRescaleLimit) halve();
    }

    uint32_t mass_of(const ResidualExclusion& excl) const {
        uint32_t mass = 0;
        for (int s = 0; s < 256; ++s)
            if (excl.contains(uint8_t(s))) mass += counts_[s];
        return mass;
    }

    struct Slice {
        uint32_t cum;
        uint32_t freq;
    };

    Slice locate_excluding(uint8_t sym, const ResidualExclusion* excl) const {
        if (excl && excl->contains(sym))
            throw std::logic_error("ErrorHistogram: symbol is excluded");
        uint32_t cum = 0;
        for (int s = 0; s < sym; ++s)
            if (!excl || !excl->contains(uint8_t(s))) cum += counts_[s];
        return {cum, counts_[sym]};
    }

    uint8_t find_excluding(uint32_t target, const ResidualExclusion* excl, Slice& slice) const {
        uint32_t cum = 0;
        for (int s = 0; s < 256; ++s) {
            if (excl && excl->contains(uint8_t(s))) continue;
            if (target < cum + counts_[s]) {
                slice = {cum, counts_[s]};
                return uint8_t(s);
            }
            cum += counts_[s];
        }
        throw std::logic_error("ErrorHistogram: target out of range");
    }

    void append_canonical(std::vector<uint8_t>& out) const {
        for (uint32_t c : counts_) detail::append_u32(out, c);
        detail::append_u32(out, total_);
    }

private:
    void halve() {
        total_ = 0;
        for (auto& c : counts_) {
            c = (c + 1) >> 1;
            total_ += c;
        }
    }

    std::array<uint32_t, 256> counts_;
    uint32_t total_;
};

struct Stage3Histograms {
    std::array<ErrorHistogram, 3> channel;
};

namespace detail {

inline void record_final_channel_event(CodingStats* stats, bool reduced, uint32_t freq,
                                       uint32_t reduced_total, uint32_t full_total) {
    if (!stats) return;
    stats->stage3_bits += self_information_bits(freq, reduced_total);
    if (!reduced) return;
    const double margin = self_information_bits(freq, full_total) -
                          self_information_bits(freq, reduced_total);
    stats->reduction_events_stage3 += 1;
    stats->reduction_margin_stage3 += margin;
    stats->min_margin_stage3 = std::min(stats->min_margin_stage3, margin);
    if (full_total != reduced_total) stats->reduction_strict_stage3 += 1;
}

}  // namespace detail

inline void stage3_encode(RangeEncoder& enc, Stage3Histograms& hists, const Palette& palette,
                          Color predicted, Color c, bool exclude_known, CodingStats* stats) {
    const std::array<uint8_t, 3> pred = {predicted.r, predicted.g, predicted.b};
    const std::array<uint8_t, 3> actual = {c.r, c.g, c.b};
    for (int k = 0; k < 3; ++k) {
        ErrorHistogram& hist = hists.channel[k];
        const uint8_t sym = error_symbol(pred[k], actual[k]);
        if (k == 2 && exclude_known) {
            const ResidualExclusion excl =
                final_channel_exclusion(palette, actual[0], actual[1], pred[2]);
            const uint32_t reduced_total = hist.total() - hist.mass_of(excl);
            const auto slice = hist.locate_excluding(sym, &excl);
            enc.encode(slice.cum, slice.freq, reduced_total);
            detail::record_final_channel_event(stats, true, slice.freq, reduced_total,
                                               hist.total());
        } else {
            const auto slice = hist.locate_excluding(sym, nullptr);
            enc.encode(slice.cum, slice.freq, hist.total());
            if (stats) stats->stage3_bits += self_information_bits(slice.freq, hist.total());
        }
        hist.bump(sym);
    }
}

inline Color stage3_decode(RangeDecoder& dec, Stage3Histograms& hists, const Palette& palette,
                           Color predicted, bool exclude_known, CodingStats* stats) {
    const std::array<uint8_t, 3> pred = {predicted.r, predicted.g, predicted.b};
    std::array<uint8_t, 3> actual{};
    for (int k = 0; k < 3; ++k) {
        ErrorHistogram& hist = hists.channel[k];
        uint8_t sym;
        if (k == 2 && exclude_known) {
            const ResidualExclusion excl =
                final_channel_exclusion(palette, actual[0], actual[1], pred[2]);
            const uint32_t reduced_total = hist.total() - hist.mass_of(excl);
            if (reduced_total == 0)
                throw CorruptStreamError("stage3: empty residual distribution", dec.position());
            const uint32_t target = dec.decode_target(reduced_total);
            ErrorHistogram::Slice slice{};
            sym = hist.find_excluding(target, &excl, slice);
            dec.consume(slice.cum, slice.freq, reduced_total);
            detail::record_final_channel_event(stats, true, slice.freq, reduced_total,
                                               hist.total());
        } else {
            const uint32_t target = dec.decode_target(hist.total());
            ErrorHistogram::Slice slice{};
            sym = hist.find_excluding(target, nullptr, slice);
            dec.consume(slice.cum, slice.freq, hist.total());
            if (stats) stats->stage3_bits += self_information_bits(slice.freq, hist.total());
        }
        actual[k] = reconstruct_from_error(pred[k], sym);
        hist.bump(sym);
    }
    return Color{actual[0], actual[1], actual[2]};
}

}  // namespace scf
