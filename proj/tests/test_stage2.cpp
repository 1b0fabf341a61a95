#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "scf/stage2.hpp"

using namespace scf;

namespace {

Palette example_palette() {
    Palette p;
    const uint32_t mult[7] = {1, 10, 2, 5, 2, 1, 3};
    for (uint32_t i = 0; i < 7; ++i)
        for (uint32_t n = 0; n < mult[i]; ++n) p.insert_or_bump(Color{uint8_t(i + 1), 0, 0});
    return p;
}

std::vector<uint32_t> example_exclusions() {
    std::vector<uint32_t> ex = {pack_color(Color{3, 0, 0}), pack_color(Color{6, 0, 0}),
                                pack_color(Color{7, 0, 0})};
    std::sort(ex.begin(), ex.end());
    return ex;
}

struct Harness {
    Palette palette;
    Stage2Models enc_models, dec_models;
    SubPaletteSplit enc_split, dec_split;
    CodingStats enc_stats, dec_stats;

    // encodes then decodes one event and checks both sides agree
    Stage2Result code_one(bool palette_complete, bool reduce, bool elide,
                          std::span<const uint32_t> exclusions, Color predicted, int radius,
                          Color c) {
        RangeEncoder enc;
        const Stage2Result sent =
            stage2_encode(enc, palette, enc_models, palette_complete, reduce, elide, exclusions,
                          predicted, radius, c, enc_split, &enc_stats);
        const auto payload = enc.finish();
        RangeDecoder dec(payload);
        const Stage2Result got =
            stage2_decode(dec, palette, dec_models, palette_complete, reduce, elide, exclusions,
                          predicted, radius, dec_split, &dec_stats);
        REQUIRE(got.in_palette == sent.in_palette);
        if (sent.in_palette) REQUIRE(got.color == sent.color);
        return got;
    }
};

}  // namespace

TEST_CASE("radius from neighboring prediction errors") {
    std::vector<uint8_t> errors(16, 0);
    SECTION("first pixel clamps to one") {
        REQUIRE(compute_radius(errors, 4, 0, 0) == 1);
    }
    SECTION("mean of the two neighbors, rounded up, plus one") {
        errors[size_t(1) * 4 + 0] = 4;  // left of (1,1)
        errors[size_t(0) * 4 + 1] = 8;  // above (1,1)
        REQUIRE(compute_radius(errors, 4, 1, 1) == 7);
    }
    SECTION("saturates at 255") {
        errors[size_t(1) * 4 + 0] = 255;
        errors[size_t(0) * 4 + 1] = 255;
        REQUIRE(compute_radius(errors, 4, 1, 1) == 255);
    }
    SECTION("border pixels use the one available neighbor") {
        errors[size_t(0) * 4 + 0] = 9;
        REQUIRE(compute_radius(errors, 4, 1, 0) == 6);  // ceil(9/2) + 1
    }
}

TEST_CASE("sub-palette split") {
    Palette p;
    p.insert_or_bump(Color{9, 10, 11});
    p.insert_or_bump(Color{10, 13, 10});
    SubPaletteSplit split;

    SECTION("everything inside a huge radius") {
        const PaletteExclusionView view(p, {});
        split_palette(view, Color{10, 10, 10}, 255, split);
        REQUIRE(split.far_positions.empty());
        REQUIRE(split.near_positions.size() == 2);
        REQUIRE(split.near_total() == 2);
    }

    SECTION("membership is the L-infinity ball") {
        const PaletteExclusionView view(p, {});
        split_palette(view, Color{10, 10, 10}, 2, split);
        REQUIRE(split.near_positions == std::vector<uint32_t>{0});
        REQUIRE(split.far_positions == std::vector<uint32_t>{1});
    }

    SECTION("empty survivor set splits to nothing") {
        std::vector<uint32_t> all = {pack_color(Color{9, 10, 11}), pack_color(Color{10, 13, 10})};
        std::sort(all.begin(), all.end());
        const PaletteExclusionView view(p, all);
        split_palette(view, Color{10, 10, 10}, 2, split);
        REQUIRE(split.near_positions.empty());
        REQUIRE(split.far_positions.empty());
        REQUIRE(split.excluded_near_mass + split.excluded_far_mass == 2);
    }
}

TEST_CASE("palette coding with context exclusions") {
    Harness h;
    h.palette = example_palette();
    const auto ex = example_exclusions();

    SECTION("reduced index event costs less") {
        // x2 has count 10; the exclusions remove mass 6, so with a radius
        // that spans the whole palette the index codes as 10 of 18 instead
        // of 10 of 24
        const auto got = h.code_one(false, true, true, ex, Color{2, 0, 0}, 255, Color{2, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.reduction_events_stage2 == 1);
        REQUIRE(h.enc_stats.stage2_bits == Catch::Approx(0.848).margin(5e-4));
        REQUIRE(h.enc_stats.reduction_margin_stage2 ==
                Catch::Approx(1.263 - 0.848).margin(1e-3));
        REQUIRE(h.enc_stats.reduction_strict_stage2 == 1);
        REQUIRE(h.enc_stats.min_margin_stage2 >= 0.0);
    }

    SECTION("without reduction the same event costs the full palette") {
        const auto got = h.code_one(false, false, true, {}, Color{2, 0, 0}, 255, Color{2, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.stage2_bits == Catch::Approx(1.263).margin(5e-4));
        REQUIRE(h.enc_stats.reduction_events_stage2 == 0);
    }

    SECTION("coding an excluded color is a contract violation") {
        RangeEncoder enc;
        REQUIRE_THROWS_AS(
            stage2_encode(enc, h.palette, h.enc_models, false, true, true, ex, Color{2, 0, 0},
                          255, Color{3, 0, 0}, h.enc_split, nullptr),
            std::logic_error);
    }
}

TEST_CASE("in-palette flag elision") {
    Harness h;
    h.palette = example_palette();

    SECTION("empty palette implies not-in-palette with zero bits") {
        Harness fresh;
        const auto got = fresh.code_one(false, true, true, {}, Color{0, 0, 0}, 1, Color{5, 5, 5});
        REQUIRE_FALSE(got.in_palette);
        REQUIRE(fresh.enc_stats.implied_in_palette_false == 1);
        REQUIRE(fresh.enc_stats.in_palette_flags_coded == 0);
        // the model still stepped, exactly as if the flag had been coded
        REQUIRE(fresh.enc_models.in_palette.zero_count() == 2);
        REQUIRE(fresh.dec_models.in_palette.zero_count() == 2);
    }

    SECTION("fully excluded view implies not-in-palette") {
        std::vector<uint32_t> all;
        for (uint32_t i = 0; i < h.palette.size(); ++i) all.push_back(h.palette.packed_at(i));
        std::sort(all.begin(), all.end());
        const auto got = h.code_one(false, true, true, all, Color{0, 0, 0}, 1, Color{50, 5, 5});
        REQUIRE_FALSE(got.in_palette);
        REQUIRE(h.enc_stats.implied_in_palette_false == 1);
    }

    SECTION("complete palette implies in-palette when elision is on") {
        const auto got = h.code_one(true, true, true, {}, Color{2, 0, 0}, 255, Color{2, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.implied_in_palette_true == 1);
        REQUIRE(h.enc_stats.in_palette_flags_coded == 0);
        REQUIRE(h.enc_stats.flag_bits_saved > 0.0);
    }

    SECTION("complete palette still codes the flag when elision is off") {
        const auto got = h.code_one(true, true, false, {}, Color{2, 0, 0}, 255, Color{2, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.implied_in_palette_true == 0);
        REQUIRE(h.enc_stats.in_palette_flags_coded == 1);
    }
}

TEST_CASE("sub-palette flag elision") {
    Harness h;
    h.palette = example_palette();

    SECTION("all survivors within the radius skip the flag") {
        const auto got = h.code_one(false, false, true, {}, Color{4, 0, 0}, 255, Color{4, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.implied_sub_palette == 1);
        REQUIRE(h.enc_stats.sub_palette_flags_coded == 0);
    }

    SECTION("a genuine two-way split codes the flag") {
        // radius 1 around color 4 keeps colors 3..5 near, the rest far
        const auto got = h.code_one(false, false, true, {}, Color{4, 0, 0}, 1, Color{7, 0, 0});
        REQUIRE(got.in_palette);
        REQUIRE(h.enc_stats.sub_palette_flags_coded == 1);
        REQUIRE(h.enc_stats.implied_sub_palette == 0);
    }

    SECTION("flag count identity over a mixed event sequence") {
        // exactly the pre-completion events with a nonempty reduced view
        // carry a flag; implied events do not
        const auto ex = example_exclusions();
        h.code_one(false, true, true, ex, Color{2, 0, 0}, 255, Color{2, 0, 0});   // coded
        h.code_one(true, true, true, {}, Color{2, 0, 0}, 255, Color{2, 0, 0});    // complete: elided
        h.code_one(false, true, true, ex, Color{2, 0, 0}, 255, Color{99, 0, 0});  // coded (miss)
        REQUIRE(h.enc_stats.in_palette_flags_coded == 2);
        REQUIRE(h.enc_stats.implied_in_palette_true == 1);
        REQUIRE(h.enc_stats.implied_in_palette_false == 0);
    }
}

TEST_CASE("stage 2 models stay symmetric across a session") {
    Harness h;
    h.palette = example_palette();
    const auto ex = example_exclusions();
    h.code_one(false, true, true, ex, Color{2, 0, 0}, 255, Color{2, 0, 0});
    h.code_one(false, true, true, ex, Color{4, 0, 0}, 2, Color{99, 0, 0});
    h.code_one(false, true, true, {}, Color{5, 0, 0}, 1, Color{5, 0, 0});
    h.code_one(true, true, true, {}, Color{1, 0, 0}, 3, Color{1, 0, 0});

    REQUIRE(h.enc_models.in_palette.zero_count() == h.dec_models.in_palette.zero_count());
    REQUIRE(h.enc_models.in_palette.one_count() == h.dec_models.in_palette.one_count());
    REQUIRE(h.enc_models.sub_palette.zero_count() == h.dec_models.sub_palette.zero_count());
    REQUIRE(h.enc_models.sub_palette.one_count() == h.dec_models.sub_palette.one_count());
}
