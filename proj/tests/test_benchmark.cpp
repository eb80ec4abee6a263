#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gbtmark/benchmark.hpp"
#include "support/signals.hpp"

using namespace gbtmark;
namespace fs = std::filesystem;

namespace {

BenchmarkOptions offline_options(const std::string& tag) {
    BenchmarkOptions options;
    options.seed = 17;
    options.codec.encode_template = "gbtmark-no-such-encoder {in} {out} {bitrate}";
    options.workdir = fs::temp_directory_path() / ("gbtmark-bench-" + tag + "-" + std::to_string(::getpid()));
    return options;
}

std::vector<NamedSignal> small_corpus() {
    return {{"a.wav", testing::speech_like(3.0, 100)}, {"b.wav", testing::speech_like(3.0, 101)}};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

} // namespace

TEST_CASE("default grid order", "[benchmark]") {
    const auto grid = default_attack_grid();
    REQUIRE(grid.size() == 16);
    std::string labels;
    for (const auto& spec : grid)
        labels += std::string(attack_label(spec.kind)) + ":" + attack_parameter_text(spec) + " ";
    CHECK(labels == "none:- awgn:20 awgn:10 mp3:64 mp3:32 mp3:16 resample:6000 resample:4000 lpf:4000 hpf:50 "
                    "as:0.9 as:0.7 requant:24 requant:8 crop:0.2 crop:0.3 ");
    for (const auto& spec : grid)
        CHECK_NOTHROW(spec.validate());
}

TEST_CASE("benchmark report without a codec", "[benchmark]") {
    const auto options = offline_options("report");
    const auto report = run_benchmark(small_corpus(), testing::logo_watermark(), options);
    REQUIRE(report.files == std::vector<std::string>{"a.wav", "b.wav"});
    REQUIRE(report.rows.size() == 16);
    CHECK_FALSE(report.codec_available());
    CHECK(report.diagnostics.size() == 6);
    for (const auto& row : report.rows) {
        REQUIRE(row.ber.size() == 2);
        if (row.attack.kind == AttackKind::mp3) {
            CHECK(row.skipped);
            CHECK_FALSE(row.ber[0].has_value());
        } else {
            CHECK_FALSE(row.skipped);
        }
    }
    CHECK(report.rows[0].mean_ber == 0.0);  // none
    CHECK(report.rows[12].mean_ber == 0.0); // requant 24
    CHECK(report.rows[11].mean_ber > 0.3);  // as 0.7
    for (double p : report.psnr_embed)
        CHECK(p >= 35.0);
    fs::remove_all(options.workdir);
}

TEST_CASE("benchmark csv is reproducible", "[benchmark]") {
    auto options = offline_options("csv");
    options.grid = {{AttackKind::none, 0}, {AttackKind::awgn, 10}, {AttackKind::mp3, 32}, {AttackKind::crop, 0.2}};
    const auto corpus = small_corpus();
    const auto wm = testing::random_watermark(25, 25, 3);
    const std::string first = render_csv(run_benchmark(corpus, wm, options));
    const std::string second = render_csv(run_benchmark(corpus, wm, options));
    CHECK(first == second);

    const auto lines = lines_of(first);
    REQUIRE(lines.size() == 3 + 2 * 4 + 4);
    CHECK(lines[0] == "# gbtmark benchmark");
    CHECK(lines[1] == "# ws=0.05 frame_size=10 coeff_fraction=0.4 w1=1 w2=0.3 seed=17 codec=unavailable");
    CHECK(lines[2] == "file,attack,parameter,ber,psnr_embed");
    CHECK(lines[3].starts_with("a.wav,none,-,0.000000,"));
    CHECK(lines[5].starts_with("a.wav,mp3,32,skipped,"));
    CHECK(lines[11].starts_with("MEAN,none,-,0.000000,"));
    CHECK(lines[13].starts_with("MEAN,mp3,32,skipped,"));

    options.seed = 18;
    CHECK(render_csv(run_benchmark(corpus, wm, options)) != first);
    fs::remove_all(options.workdir);
}

TEST_CASE("per-run seed mixing", "[benchmark]") {
    // Reference output of the splitmix64 generator started at zero.
    CHECK(detail::splitmix64(0) == 0xE220A8397B1DCDAFull);
    CHECK(detail::splitmix64(1) != detail::splitmix64(std::uint64_t{1} << 32));
}

TEST_CASE("markdown summary", "[benchmark]") {
    auto options = offline_options("md");
    options.grid = {{AttackKind::none, 0}, {AttackKind::mp3, 64}};
    const auto md = render_markdown(run_benchmark(small_corpus(), testing::logo_watermark(), options));
    CHECK(md.find("| none | - | 0.000 |") != std::string::npos);
    CHECK(md.find("| mp3 | 64 | skipped |") != std::string::npos);
    CHECK(md.find("over 2 file(s)") != std::string::npos);
    fs::remove_all(options.workdir);
}

TEST_CASE("benchmark input validation", "[benchmark]") {
    const auto options = offline_options("empty");
    CHECK_THROWS_AS(run_benchmark({}, testing::logo_watermark(), options), ValidationError);
    const std::vector<NamedSignal> tiny{{"t.wav", testing::speech_like(0.5, 1)}};
    CHECK_THROWS_AS(run_benchmark(tiny, testing::logo_watermark(), options), CapacityError);
}

TEST_CASE("corpus loading", "[benchmark]") {
    const auto dir = fs::temp_directory_path() / ("gbtmark-corpus-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK_THROWS_AS(load_corpus(dir), ValidationError);
    CHECK_THROWS_AS(load_corpus(dir / "missing"), IoError);

    write_wav(dir / "b.wav", testing::tone(440, 0.3, 800));
    write_wav(dir / "a.WAV", testing::tone(220, 0.3, 800));
    {
        std::FILE* f = std::fopen((dir / "notes.txt").c_str(), "w");
        std::fputs("ignored\n", f);
        std::fclose(f);
    }
    const auto corpus = load_corpus(dir);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].name == "a.WAV");
    CHECK(corpus[1].name == "b.wav");
    CHECK(corpus[1].signal.size() == 800);
    fs::remove_all(dir);
}
