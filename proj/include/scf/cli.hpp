#pragma once

// Command-line surface: encode, decode, verified round-trip, corpus
// benchmarking and the synthetic raster generator.
// Exit codes: 0 success, 1 usage error, 2 I/O or format error,
// 3 verification failure.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scf/generator.hpp"
#include "scf/image.hpp"
#include "scf/pipeline.hpp"
#include "scf/stats.hpp"

namespace scf::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitVerify = 3;

namespace detail {

inline std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    if (!out) throw FormatError("failed writing " + path.string());
}

inline nlohmann::json stats_json(const CodingStats& st, const CodecOptions& opt,
                                 uint64_t pixel_count) {
    nlohmann::json j;
    j["options"] = {{"palette_reduction", opt.palette_reduction},
                    {"residual_reduction", opt.residual_reduction},
                    {"implicit_flags", opt.implicit_flags}};
    j["pixels"] = st.pixels;
    j["unique_colors"] = st.unique_colors;
    j["container_bytes"] = st.container_bytes;
    j["payload_bytes"] = st.payload_bytes;
    j["bpp"] = st.bpp(pixel_count);
    j["stage_pixels"] = {{"stage1", st.stage1_coded},
                         {"stage2", st.stage2_coded},
                         {"stage3", st.stage3_coded}};
    j["stage1_escapes"] = st.stage1_escapes;
    j["stage_bits"] = {{"stage1", st.stage1_bits},
                       {"stage2", st.stage2_bits},
                       {"stage3", st.stage3_bits}};
    j["flags"] = {{"in_palette_coded", st.in_palette_flags_coded},
                  {"in_palette_bits", st.in_palette_flag_bits},
                  {"sub_palette_coded", st.sub_palette_flags_coded},
                  {"sub_palette_bits", st.sub_palette_flag_bits},
                  {"implied_in_palette_true", st.implied_in_palette_true},
                  {"implied_in_palette_false", st.implied_in_palette_false},
                  {"implied_sub_palette", st.implied_sub_palette},
                  {"bits_saved_by_implicit_flags", st.flag_bits_saved}};
    j["reduction_audit"] = {
        {"stage2_events", st.reduction_events_stage2},
        {"stage2_strict", st.reduction_strict_stage2},
        {"stage2_margin_bits", st.reduction_margin_stage2},
        {"stage3_events", st.reduction_events_stage3},
        {"stage3_strict", st.reduction_strict_stage3},
        {"stage3_margin_bits", st.reduction_margin_stage3},
    };
    j["palette_complete_pixel"] = st.palette_complete_pixel;
    j["stage3_after_complete"] = st.stage3_after_complete;
    return j;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct BenchCombo {
    std::string name;
    CodecOptions options;
};

inline std::vector<BenchCombo> bench_combos(bool matrix) {
    auto opt = [](bool p, bool r, bool f) {
        CodecOptions o;
        o.palette_reduction = p;
        o.residual_reduction = r;
        o.implicit_flags = f;
        return o;
    };
    if (!matrix)
        return {{"base", opt(false, false, false)},
                {"p", opt(true, false, false)},
                {"pr", opt(true, true, false)},
                {"prf", opt(true, true, true)}};
    std::vector<BenchCombo> combos;
    for (int bits = 0; bits < 8; ++bits) {
        std::string name;
        if (bits & 1) name += 'p';
        if (bits & 2) name += 'r';
        if (bits & 4) name += 'f';
        if (name.empty()) name = "base";
        combos.push_back({name, opt(bits & 1, bits & 2, bits & 4)});
    }
    return combos;
}

struct BenchRow {
    std::string file;
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t unique_colors = 0;
    std::vector<uint64_t> bytes;  // per combo
    bool failed = false;
    std::string error;
};

inline unsigned bench_threads(size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("SCF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = unsigned(v);
    }
    return unsigned(std::min<size_t>(n, std::max<size_t>(jobs, 1)));
}

inline std::vector<BenchRow> run_bench(const std::filesystem::path& dir,
                                       const std::vector<BenchCombo>& combos) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<BenchRow> rows(files.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= files.size()) return;
            BenchRow& row = rows[i];
            row.file = files[i].filename().string();
            try {
                const Image img = read_ppm(files[i]);
                row.width = img.width;
                row.height = img.height;
                row.unique_colors = count_unique_colors(img);
                for (const auto& combo : combos)
                    row.bytes.push_back(encode_image(img, combo.options).size());
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned threads = bench_threads(files.size());
    for (unsigned t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows,
                            const std::vector<BenchCombo>& combos) {
    out << "file,width,height,unique_colors,status";
    for (const auto& c : combos) out << ",bytes_" << c.name << ",bpp_" << c.name;
    for (size_t i = 1; i < combos.size(); ++i) out << ",pct_" << combos[i].name;
    out << "\n";
    for (const auto& row : rows) {
        out << row.file << "," << row.width << "," << row.height << "," << row.unique_colors
            << "," << (row.failed ? "failed" : "ok");
        if (row.failed) {
            out << "\n";
            continue;
        }
        const double pixels = double(row.width) * row.height;
        for (size_t i = 0; i < combos.size(); ++i)
            out << "," << row.bytes[i] << ","
                << format_double(8.0 * double(row.bytes[i]) / pixels);
        for (size_t i = 1; i < combos.size(); ++i)
            out << "," << format_double(100.0 * double(row.bytes[i]) / double(row.bytes[0]));
        out << "\n";
    }
}

}  // namespace detail

struct ToggleFlags {
    bool no_p = false;
    bool no_r = false;
    bool no_f = false;

    CodecOptions options() const {
        CodecOptions o;
        o.palette_reduction = !no_p;
        o.residual_reduction = !no_r;
        o.implicit_flags = !no_f;
        return o;
    }
};

inline void add_toggles(CLI::App* cmd, ToggleFlags& t) {
    cmd->add_flag("--no-p", t.no_p, "disable palette reduction");
    cmd->add_flag("--no-r", t.no_r, "disable residual reduction");
    cmd->add_flag("--no-f", t.no_f, "disable implicit stage flags");
}

inline int cmd_encode(const std::string& in, const std::string& out, const CodecOptions& options,
                      const std::string& stats_path) {
    const Image img = read_ppm(in);
    CodingStats stats;
    const std::vector<uint8_t> container = encode_image(img, options, &stats);
    detail::write_file(out, container);
    if (!stats_path.empty()) {
        std::ofstream js(stats_path);
        if (!js) throw FormatError("cannot create " + stats_path);
        js << detail::stats_json(stats, options, img.pixel_count()).dump(2) << "\n";
    }
    std::fprintf(stderr, "%s: %ux%u, %zu bytes, %.4f bpp\n", out.c_str(), img.width, img.height,
                 container.size(), 8.0 * double(container.size()) / double(img.pixel_count()));
    return kExitOk;
}

inline int cmd_decode(const std::string& in, const std::string& out) {
    const std::vector<uint8_t> container = detail::read_file(in);
    const Image img = decode_image(container);
    write_ppm(img, out);
    return kExitOk;
}

inline int cmd_roundtrip(const std::string& in, const CodecOptions& options, bool verify_state) {
    const Image img = read_ppm(in);
    std::vector<uint64_t> enc_digests, dec_digests;
    CodingStats stats;
    const std::vector<uint8_t> container =
        encode_image(img, options, &stats, verify_state ? &enc_digests : nullptr);
    const Image back = decode_image(container, nullptr, verify_state ? &dec_digests : nullptr);
    if (back.width != img.width || back.height != img.height) {
        std::fprintf(stderr, "FAIL %s: dimension mismatch\n", in.c_str());
        return kExitVerify;
    }
    for (uint32_t y = 0; y < img.height; ++y)
        for (uint32_t x = 0; x < img.width; ++x)
            if (img.at(x, y) != back.at(x, y)) {
                std::fprintf(stderr, "FAIL %s: first mismatch at pixel (%u, %u)\n", in.c_str(), x,
                             y);
                return kExitVerify;
            }
    if (verify_state) {
        if (enc_digests != dec_digests) {
            size_t i = 0;
            while (i < enc_digests.size() && i < dec_digests.size() &&
                   enc_digests[i] == dec_digests[i])
                ++i;
            std::fprintf(stderr, "FAIL %s: coder state diverged at pixel %zu\n", in.c_str(), i);
            return kExitVerify;
        }
        std::fprintf(stderr, "state checksums agree for all %zu pixels\n", enc_digests.size());
    }
    std::fprintf(stderr, "PASS %s: %zu pixels, %zu bytes\n", in.c_str(), img.pixel_count(),
                 container.size());
    return kExitOk;
}

inline int cmd_bench(const std::string& dir, const std::string& csv_path, bool matrix) {
    const auto combos = detail::bench_combos(matrix);
    const auto rows = detail::run_bench(dir, combos);
    std::ofstream csv(csv_path);
    if (!csv) throw FormatError("cannot create " + csv_path);
    detail::write_bench_csv(csv, rows, combos);
    size_t failed = 0;
    for (const auto& r : rows) failed += r.failed;
    std::fprintf(stderr, "bench: %zu images, %zu failed -> %s\n", rows.size(), failed,
                 csv_path.c_str());
    return kExitOk;
}

inline int cmd_gen(const GenSpec& spec, const std::string& out) {
    write_ppm(generate_image(spec), out);
    return kExitOk;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"soft-context-formation screen content codec"};
    app.require_subcommand(1);

    auto* enc = app.add_subcommand("encode", "compress a PPM (P6) raster");
    std::string enc_in, enc_out, enc_stats;
    ToggleFlags enc_toggles;
    enc->add_option("--in", enc_in, "input PPM")->required();
    enc->add_option("--out", enc_out, "output container")->required();
    enc->add_option("--stats", enc_stats, "write per-stage statistics JSON");
    add_toggles(enc, enc_toggles);

    auto* dec = app.add_subcommand("decode", "decompress a container to PPM");
    std::string dec_in, dec_out;
    dec->add_option("--in", dec_in, "input container")->required();
    dec->add_option("--out", dec_out, "output PPM")->required();

    auto* rt = app.add_subcommand("roundtrip", "encode, decode and compare");
    std::string rt_in;
    bool rt_verify_state = false;
    ToggleFlags rt_toggles;
    rt->add_option("--in", rt_in, "input PPM")->required();
    rt->add_flag("--verify-state", rt_verify_state, "compare per-pixel state checksums");
    add_toggles(rt, rt_toggles);

    auto* bench = app.add_subcommand("bench", "compress a corpus directory");
    std::string bench_dir, bench_csv;
    bool bench_matrix = false;
    bench->add_option("--dir", bench_dir, "directory of .ppm files")->required();
    bench->add_option("--csv", bench_csv, "output CSV")->required();
    bench->add_flag("--matrix", bench_matrix, "run all eight option combinations");

    auto* gen = app.add_subcommand("gen", "generate a synthetic screen-content raster");
    gen->set_help_flag("--help", "print help");  // frees -h/--h for the height option
    std::string gen_kind = "text", gen_out;
    GenSpec spec;
    gen->add_option("--kind", gen_kind, "text|blocks|gradient|noise");
    gen->add_option("--w", spec.width, "width")->required();
    gen->add_option("--h", spec.height, "height")->required();
    gen->add_option("--colors", spec.colors, "palette size (0 = kind default)");
    gen->add_option("--seed", spec.seed, "random seed");
    gen->add_option("--out", gen_out, "output PPM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*enc) return cmd_encode(enc_in, enc_out, enc_toggles.options(), enc_stats);
        if (*dec) return cmd_decode(dec_in, dec_out);
        if (*rt) return cmd_roundtrip(rt_in, rt_toggles.options(), rt_verify_state);
        if (*bench) return cmd_bench(bench_dir, bench_csv, bench_matrix);
        if (*gen) {
            spec.kind = gen_kind_from_name(gen_kind);
            return cmd_gen(spec, gen_out);
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace scf::cli
