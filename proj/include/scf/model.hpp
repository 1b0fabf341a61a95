#pragma once

// Adaptive statistical structures shared by all coding stages: sparse color
// histograms, the global color palette, and non-mutating exclusion views
// that drop symbols a previous stage has already ruled out.

#include <algorithm>
#include <array>
#include <cassert>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "scf/entropy.hpp"

namespace scf {

struct Color {
    uint8_t r = 0;
    uint8_t g = 0;
    uint8_t b = 0;

    friend constexpr bool operator==(Color, Color) = default;
    friend constexpr auto operator<=>(Color, Color) = default;  // (r, g, b) order
};

constexpr uint32_t pack_color(Color c) {
    return (uint32_t(c.r) << 16) | (uint32_t(c.g) << 8) | c.b;
}

constexpr Color unpack_color(uint32_t v) {
    return Color{uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
}

inline int linf_distance(Color a, Color b) {
    const int dr = std::abs(int(a.r) - int(b.r));
    const int dg = std::abs(int(a.g) - int(b.g));
    const int db = std::abs(int(a.b) - int(b.b));
    return std::max(dr, std::max(dg, db));
}

namespace detail {

inline void append_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(uint8_t(v >> s));
}

struct Fnv64 {
    uint64_t h = 14695981039346656037ull;

    void feed(uint8_t byte) {
        h ^= byte;
        h *= 1099511628211ull;
    }
    void feed_u32(uint32_t v) {
        for (int s = 0; s < 32; s += 8) feed(uint8_t(v >> s));
    }
    void feed_bytes(std::span<const uint8_t> bytes) {
        for (uint8_t b : bytes) feed(b);
    }
};

}  // namespace detail

// Sparse color -> count map kept sorted by packed color, with a cached total.
// Entry order doubles as the coding alphabet order, so both coder sides see
// the same symbol layout without any extra signaling.
class ColorHistogram {
public:
    struct Entry {
        uint32_t color;  // packed RGB
        uint32_t count;
    };

    struct Slice {
        uint32_t cum;
        uint32_t freq;
    };

    bool empty() const { return entries_.empty(); }
    uint32_t distinct() const { return uint32_t(entries_.size()); }
    uint32_t total() const { return total_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void clear() {
        entries_.clear();
        total_ = 0;
    }

    uint32_t count_of(uint32_t color) const {
        const auto it = find(color);
        return it != entries_.end() && it->color == color ? it->count : 0;
    }

    void add(uint32_t color, uint32_t amount) {
        assert(amount > 0);
        const auto it = find(color);
        if (it != entries_.end() && it->color == color)
            it->count += amount;
        else
            entries_.insert(it, Entry{color, amount});
        total_ += amount;
    }

    // Count increment with a rescaling bound on the total. Halving rounds up,
    // so no entry ever drops to zero and the support is preserved.
    void bump_capped(uint32_t color, uint32_t cap) {
        add(color, 1);
        if (total_ > cap) halve();
    }

    void halve() {
        total_ = 0;
        for (auto& e : entries_) {
            e.count = (e.count + 1) >> 1;
            total_ += e.count;
        }
    }

    // Rebuilds this histogram as one part scaled by a weight.
    void assign_scaled(const ColorHistogram& src, uint32_t weight) {
        entries_.resize(src.entries_.size());
        for (size_t i = 0; i < entries_.size(); ++i)
            entries_[i] = Entry{src.entries_[i].color, src.entries_[i].count * weight};
        total_ = src.total_ * weight;
    }

    // Rebuilds this histogram as the weighted sum of two others.
    void assign_merge_scaled(const ColorHistogram& lhs, uint32_t wl, const ColorHistogram& rhs,
                             uint32_t wr) {
        assert(this != &lhs && this != &rhs);
        entries_.resize(lhs.entries_.size() + rhs.entries_.size());
        Entry* w = entries_.data();
        const Entry* a = lhs.entries_.data();
        const Entry* ae = a + lhs.entries_.size();
        const Entry* b = rhs.entries_.data();
        const Entry* be = b + rhs.entries_.size();
        uint32_t total = 0;
        while (a != ae && b != be) {
            if (a->color < b->color) {
                *w = Entry{a->color, a->count * wl};
                ++a;
            } else if (b->color < a->color) {
                *w = Entry{b->color, b->count * wr};
                ++b;
            } else {
                *w = Entry{a->color, a->count * wl + b->count * wr};
                ++a;
                ++b;
            }
            total += w->count;
            ++w;
        }
        for (; a != ae; ++a, ++w) {
            *w = Entry{a->color, a->count * wl};
            total += w->count;
        }
        for (; b != be; ++b, ++w) {
            *w = Entry{b->color, b->count * wr};
            total += w->count;
        }
        entries_.resize(size_t(w - entries_.data()));
        total_ = total;
    }

    std::optional<Slice> locate(uint32_t color) const {
        uint32_t cum = 0;
        for (const auto& e : entries_) {
            if (e.color == color) return Slice{cum, e.count};
            if (e.color > color) break;
            cum += e.count;
        }
        return std::nullopt;
    }

    // pre: target < total()
    Entry find_by_cum(uint32_t target, Slice& slice) const {
        uint32_t cum = 0;
        for (const auto& e : entries_) {
            if (target < cum + e.count) {
                slice = Slice{cum, e.count};
                return e;
            }
            cum += e.count;
        }
        throw std::logic_error("ColorHistogram::find_by_cum: target out of range");
    }

    void append_canonical(std::vector<uint8_t>& out) const {
        detail::append_u32(out, uint32_t(entries_.size()));
        for (const auto& e : entries_) {
            detail::append_u32(out, e.color);
            detail::append_u32(out, e.count);
        }
        detail::append_u32(out, total_);
    }

private:
    std::vector<Entry>::iterator find(uint32_t color) {
        return std::lower_bound(entries_.begin(), entries_.end(), color,
                                [](const Entry& e, uint32_t c) { return e.color < c; });
    }
    std::vector<Entry>::const_iterator find(uint32_t color) const {
        return std::lower_bound(entries_.begin(), entries_.end(), color,
                                [](const Entry& e, uint32_t c) { return e.color < c; });
    }

    std::vector<Entry> entries_;
    uint32_t total_ = 0;
};

// Global color palette: every color seen so far with an occurrence count,
// in first-appearance order. First-appearance order is the shared coding
// alphabet for palette indices. A secondary index over the (r, g) prefix
// serves the residual stage's final-channel exclusion lookups.
class Palette {
public:
    static constexpr uint32_t kRescaleLimit = 1u << 16;

    uint32_t size() const { return uint32_t(colors_.size()); }
    uint32_t total() const { return total_; }

    std::optional<uint32_t> lookup(Color c) const {
        const auto it = index_.find(pack_color(c));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void insert_or_bump(Color c) {
        const uint32_t packed = pack_color(c);
        const auto [it, inserted] = index_.try_emplace(packed, uint32_t(colors_.size()));
        if (inserted) {
            colors_.push_back(packed);
            counts_.push_back(1);
            rg_index_[uint16_t(packed >> 8)].push_back(it->second);
        } else {
            counts_[it->second] += 1;
        }
        total_ += 1;
        if (total_ > kRescaleLimit) halve_counts();
    }

    Color color_at(uint32_t pos) const { return unpack_color(colors_[pos]); }
    uint32_t packed_at(uint32_t pos) const { return colors_[pos]; }
    uint32_t count_at(uint32_t pos) const { return counts_[pos]; }
    std::span<const uint32_t> colors() const { return colors_; }
    std::span<const uint32_t> counts() const { return counts_; }

    std::span<const uint32_t> positions_with_rg(uint8_t r, uint8_t g) const {
        const auto it = rg_index_.find(uint16_t((uint16_t(r) << 8) | g));
        if (it == rg_index_.end()) return {};
        return it->second;
    }

    void reserve(size_t n) {
        colors_.reserve(n);
        counts_.reserve(n);
        index_.reserve(n);
    }

    void append_canonical(std::vector<uint8_t>& out) const {
        detail::append_u32(out, size());
        for (uint32_t i = 0; i < size(); ++i) {
            detail::append_u32(out, colors_[i]);
            detail::append_u32(out, counts_[i]);
        }
        detail::append_u32(out, total_);
    }

private:
    void halve_counts() {
        total_ = 0;
        for (auto& c : counts_) {
            c = (c + 1) >> 1;
            total_ += c;
        }
    }

    std::vector<uint32_t> colors_;
    std::vector<uint32_t> counts_;
    std::unordered_map<uint32_t, uint32_t> index_;
    std::unordered_map<uint16_t, std::vector<uint32_t>> rg_index_;
    uint32_t total_ = 0;
};

// Read-only view of a palette with a set of colors removed. The base is
// never touched: excluded colors stay valid palette members for later
// pixels, they just carry zero probability for the current event.
class PaletteExclusionView {
public:
    // excluded: sorted packed colors; entries absent from the palette are ignored.
    PaletteExclusionView(const Palette& base, std::span<const uint32_t> excluded)
        : base_(&base), excluded_(excluded) {
        assert(std::is_sorted(excluded.begin(), excluded.end()));
        excluded_positions_.reserve(excluded.size());
        for (uint32_t packed : excluded) {
            if (auto pos = base.lookup(unpack_color(packed))) {
                excluded_mass_ += base.count_at(*pos);
                excluded_positions_.push_back(*pos);
            }
        }
        std::sort(excluded_positions_.begin(), excluded_positions_.end());
    }

    const Palette& base() const { return *base_; }
    uint32_t excluded_mass() const { return excluded_mass_; }
    uint32_t total() const { return base_->total() - excluded_mass_; }
    const std::vector<uint32_t>& excluded_positions() const { return excluded_positions_; }

    bool excludes(uint32_t packed) const {
        return std::binary_search(excluded_.begin(), excluded_.end(), packed);
    }

    uint32_t freq_of(Color c) const {
        if (excludes(pack_color(c))) return 0;
        const auto pos = base_->lookup(c);
        return pos ? base_->count_at(*pos) : 0;
    }

    double self_information(Color c) const {
        return self_information_bits(freq_of(c), total());
    }

    template <class Fn>
    void for_each_survivor(Fn&& fn) const {
        const uint32_t* next_excluded = excluded_positions_.data();
        const uint32_t* end_excluded = next_excluded + excluded_positions_.size();
        for (uint32_t pos = 0; pos < base_->size(); ++pos) {
            if (next_excluded != end_excluded && *next_excluded == pos) {
                ++next_excluded;
                continue;
            }
            fn(pos, base_->packed_at(pos), base_->count_at(pos));
        }
    }

private:
    const Palette* base_;
    std::span<const uint32_t> excluded_;
    std::vector<uint32_t> excluded_positions_;  // resolved against the base, ascending
    uint32_t excluded_mass_ = 0;
};

// Same idea over a plain color histogram.
class HistogramExclusionView {
public:
    HistogramExclusionView(const ColorHistogram& base, std::span<const uint32_t> excluded)
        : base_(&base), excluded_(excluded) {
        assert(std::is_sorted(excluded.begin(), excluded.end()));
        for (uint32_t packed : excluded) excluded_mass_ += base.count_of(packed);
    }

    uint32_t excluded_mass() const { return excluded_mass_; }
    uint32_t total() const { return base_->total() - excluded_mass_; }

    bool excludes(uint32_t packed) const {
        return std::binary_search(excluded_.begin(), excluded_.end(), packed);
    }

    uint32_t freq_of(uint32_t packed) const {
        return excludes(packed) ? 0 : base_->count_of(packed);
    }

    double self_information(uint32_t packed) const {
        return self_information_bits(freq_of(packed), total());
    }

private:
    const ColorHistogram* base_;
    std::span<const uint32_t> excluded_;
    uint32_t excluded_mass_ = 0;
};

}  // namespace scf
