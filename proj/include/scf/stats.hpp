#pragma once

// Per-session coding statistics. Bit figures are ideal self-information
// sums per event; exact byte sizes come from the container itself.

#include <cstdint>
#include <limits>

namespace scf {

struct CodingStats {
    uint64_t pixels = 0;

    uint64_t stage1_coded = 0;
    uint64_t stage1_escapes = 0;
    uint64_t stage2_coded = 0;
    uint64_t stage3_coded = 0;

    double stage1_bits = 0;
    double stage2_bits = 0;  // palette index bits, excluding flags
    double stage3_bits = 0;

    uint64_t in_palette_flags_coded = 0;
    double in_palette_flag_bits = 0;
    uint64_t sub_palette_flags_coded = 0;
    double sub_palette_flag_bits = 0;

    uint64_t implied_in_palette_true = 0;   // elided after palette completion
    uint64_t implied_in_palette_false = 0;  // elided because the reduced view was empty
    uint64_t implied_sub_palette = 0;       // elided because one sub-palette was empty
    double flag_bits_saved = 0;             // what the completion-elided flags would have cost

    // Exclusion audit: cost deltas of reduced vs unreduced distributions,
    // recorded per event so the never-worse property can be checked exactly.
    uint64_t reduction_events_stage2 = 0;
    uint64_t reduction_strict_stage2 = 0;
    double reduction_margin_stage2 = 0;
    double min_margin_stage2 = std::numeric_limits<double>::infinity();

    uint64_t reduction_events_stage3 = 0;
    uint64_t reduction_strict_stage3 = 0;
    double reduction_margin_stage3 = 0;
    double min_margin_stage3 = std::numeric_limits<double>::infinity();

    uint64_t stage3_after_complete = 0;  // must stay zero
    int64_t palette_complete_pixel = -1;
    uint32_t unique_colors = 0;

    uint64_t payload_bytes = 0;
    uint64_t container_bytes = 0;

    double bpp(uint64_t pixel_count) const {
        return pixel_count == 0 ? 0.0 : 8.0 * double(container_bytes) / double(pixel_count);
    }
};

}  // namespace scf
