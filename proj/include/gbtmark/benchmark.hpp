#pragma once

// Robustness benchmark: embed into every corpus clip, run each attack of a
// grid, extract and tabulate BER.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbtmark/attacks.hpp"
#include "gbtmark/io.hpp"
#include "gbtmark/metrics.hpp"
#include "gbtmark/watermark.hpp"

namespace gbtmark {

inline std::vector<AttackSpec> default_attack_grid() {
    using K = AttackKind;
    return {
        {K::none, 0},          {K::awgn, 20},        {K::awgn, 10},        {K::mp3, 64},
        {K::mp3, 32},          {K::mp3, 16},         {K::resample, 6000},  {K::resample, 4000},
        {K::lowpass, 4000},    {K::highpass, 50},    {K::amplitude_scale, 0.9}, {K::amplitude_scale, 0.7},
        {K::requantize, 24},   {K::requantize, 8},   {K::crop, 0.20},      {K::crop, 0.30},
    };
}

struct NamedSignal {
    std::string name;
    AudioSignal signal;
};

struct BenchmarkOptions {
    EmbedParams params{};
    std::uint64_t seed = 0;
    CodecCommand codec{};
    std::filesystem::path workdir = std::filesystem::temp_directory_path() / "gbtmark-bench";
    std::vector<AttackSpec> grid = default_attack_grid();
};

struct BenchmarkRow {
    AttackSpec attack;
    std::vector<std::optional<double>> ber; // per file, nullopt when skipped
    bool skipped = false;
    double mean_ber = 0.0;
};

struct BenchmarkReport {
    EmbedParams params{};
    std::uint64_t seed = 0;
    std::vector<std::string> files;
    std::vector<double> psnr_embed;
    std::vector<BenchmarkRow> rows;
    std::vector<std::string> diagnostics;

    double mean_psnr() const {
        double acc = 0.0;
        for (double p : psnr_embed)
            acc += p;
        return psnr_embed.empty() ? 0.0 : acc / static_cast<double>(psnr_embed.size());
    }

    bool codec_available() const {
        return std::none_of(rows.begin(), rows.end(),
                            [](const BenchmarkRow& r) { return r.attack.kind == AttackKind::mp3 && r.skipped; });
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct FileOutcome {
    double psnr = 0.0;
    std::vector<std::optional<double>> ber;
    std::vector<std::string> diagnostics;
};

inline FileOutcome run_file(const NamedSignal& clip, std::size_t file_index, const WatermarkImage& watermark,
                            const BenchmarkOptions& options, const TransformPlan& plan) {
    FileOutcome outcome;
    const WatermarkedResult marked = embed(clip.signal, watermark, options.params, plan);
    outcome.psnr = psnr(clip.signal, marked.signal).psnr_db;

    for (std::size_t a = 0; a < options.grid.size(); ++a) {
        AttackSpec spec = options.grid[a];
        spec.seed = splitmix64(options.seed ^ (std::uint64_t(file_index) << 32 | a));
        try {
            const auto workdir = options.workdir / ("file" + std::to_string(file_index));
            const AudioSignal attacked = apply_attack(marked.signal, spec, options.codec, workdir);
            outcome.ber.push_back(ber(watermark, extract(attacked, marked.key, plan)));
        } catch (const ExternalToolError& e) {
            outcome.ber.push_back(std::nullopt);
            outcome.diagnostics.push_back(clip.name + " " + std::string(attack_label(spec.kind)) + ": " + e.what());
        }
    }
    return outcome;
}

} // namespace detail

/// Runs the grid on every clip. Clips are processed concurrently; the report
/// keeps corpus order, then grid order.
inline BenchmarkReport run_benchmark(const std::vector<NamedSignal>& corpus, const WatermarkImage& watermark,
                                     const BenchmarkOptions& options) {
    if (corpus.empty())
        throw ValidationError("benchmark corpus is empty");
    options.params.validate();
    for (const auto& spec : options.grid)
        spec.validate();
    const TransformPlan plan(options.params.graph);

    std::vector<std::future<detail::FileOutcome>> jobs;
    for (std::size_t f = 0; f < corpus.size(); ++f)
        jobs.push_back(std::async(std::launch::async, [&, f] {
            return detail::run_file(corpus[f], f, watermark, options, plan);
        }));

    BenchmarkReport report;
    report.params = options.params;
    report.seed = options.seed;
    report.rows.resize(options.grid.size());
    for (std::size_t a = 0; a < options.grid.size(); ++a)
        report.rows[a].attack = options.grid[a];

    std::vector<detail::FileOutcome> outcomes;
    for (auto& job : jobs)
        outcomes.push_back(job.get());

    for (std::size_t f = 0; f < corpus.size(); ++f) {
        report.files.push_back(corpus[f].name);
        report.psnr_embed.push_back(outcomes[f].psnr);
        for (std::size_t a = 0; a < options.grid.size(); ++a)
            report.rows[a].ber.push_back(outcomes[f].ber[a]);
        report.diagnostics.insert(report.diagnostics.end(), outcomes[f].diagnostics.begin(),
                                  outcomes[f].diagnostics.end());
    }

    for (auto& row : report.rows) {
        double acc = 0.0;
        for (const auto& b : row.ber) {
            if (!b)
                row.skipped = true;
            else
                acc += *b;
        }
        row.mean_ber = row.skipped ? 0.0 : acc / static_cast<double>(row.ber.size());
    }
    return report;
}

inline std::vector<NamedSignal> load_corpus(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw IoError("corpus directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".wav")
            paths.push_back(entry.path());
    }
    if (paths.empty())
        throw ValidationError("corpus directory " + dir.string() + " contains no WAV files");
    std::sort(paths.begin(), paths.end());

    std::vector<NamedSignal> corpus;
    for (const auto& p : paths)
        corpus.push_back({p.filename().string(), read_wav(p)});
    return corpus;
}

inline std::string attack_parameter_text(const AttackSpec& spec) {
    return spec.kind == AttackKind::none ? "-" : detail::format_double(spec.parameter);
}

/// CSV with a '#' metadata preamble, one row per (file, attack) and a MEAN
/// row per attack.
inline std::string render_csv(const BenchmarkReport& report) {
    std::string out = "# gbtmark benchmark\n";
    out += "# ws=" + detail::format_double(report.params.ws) +
           " frame_size=" + std::to_string(report.params.graph.frame_size) +
           " coeff_fraction=" + detail::format_double(report.params.coeff_fraction) +
           " w1=" + detail::format_double(report.params.graph.w1) +
           " w2=" + detail::format_double(report.params.graph.w2) + " seed=" + std::to_string(report.seed) +
           " codec=" + (report.codec_available() ? "available" : "unavailable") + "\n";
    out += "file,attack,parameter,ber,psnr_embed\n";
    for (std::size_t f = 0; f < report.files.size(); ++f) {
        for (const auto& row : report.rows) {
            const auto& b = row.ber[f];
            out += report.files[f] + "," + std::string(attack_label(row.attack.kind)) + "," +
                   attack_parameter_text(row.attack) + "," + (b ? detail::fixed(*b, 6) : "skipped") + "," +
                   detail::fixed(report.psnr_embed[f], 4) + "\n";
        }
    }
    for (const auto& row : report.rows) {
        out += "MEAN," + std::string(attack_label(row.attack.kind)) + "," + attack_parameter_text(row.attack) + "," +
               (row.skipped ? "skipped" : detail::fixed(row.mean_ber, 6)) + "," + detail::fixed(report.mean_psnr(), 4) +
               "\n";
    }
    return out;
}

inline std::string render_markdown(const BenchmarkReport& report) {
    std::string out = "| Attack | Parameter | Mean BER |\n|---|---|---|\n";
    for (const auto& row : report.rows)
        out += "| " + std::string(attack_label(row.attack.kind)) + " | " + attack_parameter_text(row.attack) + " | " +
               (row.skipped ? "skipped" : detail::fixed(row.mean_ber, 3)) + " |\n";
    out += "\nMean PSNR (host vs watermarked): " + detail::fixed(report.mean_psnr(), 2) + " dB over " +
           std::to_string(report.files.size()) + " file(s)\n";
    return out;
}

} // namespace gbtmark
