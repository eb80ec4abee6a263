#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "gbtmark/io.hpp"
#include "support/signals.hpp"

using namespace gbtmark;
namespace fs = std::filesystem;

namespace {

// Independent little-endian WAV writer for arbitrary header fields.
struct WavSpec {
    std::uint16_t format = 1;
    std::uint16_t channels = 1;
    std::uint32_t rate = 8000;
    std::uint16_t bits = 16;
    std::string extra_chunk; // inserted between fmt and data, already framed
};

void put(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> make_wav(const std::vector<std::int16_t>& pcm, const WavSpec& spec = {}) {
    std::vector<std::uint8_t> out{'R', 'I', 'F', 'F'};
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
    put(out, 36 + static_cast<std::uint32_t>(spec.extra_chunk.size()) + data_bytes, 4);
    for (char c : std::string("WAVEfmt "))
        out.push_back(static_cast<std::uint8_t>(c));
    put(out, 16, 4);
    put(out, spec.format, 2);
    put(out, spec.channels, 2);
    put(out, spec.rate, 4);
    put(out, spec.rate * spec.channels * spec.bits / 8, 4);
    put(out, spec.channels * spec.bits / 8, 2);
    put(out, spec.bits, 2);
    out.insert(out.end(), spec.extra_chunk.begin(), spec.extra_chunk.end());
    for (char c : std::string("data"))
        out.push_back(static_cast<std::uint8_t>(c));
    put(out, data_bytes, 4);
    for (auto s : pcm)
        put(out, static_cast<std::uint16_t>(s), 2);
    return out;
}

std::string list_chunk() {
    std::string c = "LIST";
    const std::string body("INFOISFT\x05\0\0\0test\0\0", 18);
    const auto n = static_cast<std::uint32_t>(body.size());
    for (int i = 0; i < 4; ++i)
        c.push_back(static_cast<char>(n >> (8 * i)));
    return c + body;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("gbtmark-io-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

EmbeddingKey sample_key(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> smax(0.0500001, 3.0);
    EmbeddingKey key;
    key.sample_rate = 8000;
    key.watermark_width = 25;
    key.watermark_height = count / 25;
    std::size_t index = 0;
    for (std::size_t i = 0; i < count; ++i) {
        index += 1 + rng() % 7;
        key.records.push_back({index, smax(rng)});
    }
    return key;
}

std::string with_line(std::string text, std::size_t lineno, const std::string& replacement) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < lineno; ++i)
        start = text.find('\n', start) + 1;
    const std::size_t end = text.find('\n', start);
    return text.replace(start, end - start, replacement);
}

} // namespace

TEST_CASE("wav sample scaling", "[io][wav]") {
    const auto sig = parse_wav(make_wav({32767, -32768, 0, 16384}));
    CHECK(sig.sample_rate == 8000);
    REQUIRE(sig.size() == 4);
    CHECK(sig.samples[0] == 0.999969482421875);
    CHECK(sig.samples[1] == -1.0);
    CHECK(sig.samples[2] == 0.0);
    CHECK(sig.samples[3] == 0.5);
}

TEST_CASE("wav write then read stays within one step", "[io][wav]") {
    // Writing scales by 32767 and reading by 32768, so the error is at most
    // (|x| + 0.5) / 32768; within +-0.5 that is below one 1/32767 step.
    auto s = testing::ar1_noise(5000, 0.95, 0.2, 1, 16000);
    const auto dir = scratch("rt");
    write_wav(dir / "a.wav", s);
    const auto back = read_wav(dir / "a.wav");
    CHECK(back.sample_rate == 16000);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double err = std::abs(back.samples[i] - s.samples[i]);
        REQUIRE(err <= (std::abs(s.samples[i]) + 0.5) / 32768.0 + 1e-15);
        if (std::abs(s.samples[i]) <= 0.5)
            REQUIRE(err <= 1.0 / 32767.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("wav encoder header matches the reference layout", "[io][wav]") {
    const AudioSignal s{{0.0, 1.0, -1.0}, 8000};
    const std::string bytes = encode_wav(s);
    const auto ref = make_wav({0, 32767, -32767});
    REQUIRE(bytes.size() == ref.size());
    CHECK(std::memcmp(bytes.data(), ref.data(), ref.size()) == 0);
}

TEST_CASE("unknown chunks are skipped", "[io][wav]") {
    WavSpec spec;
    spec.extra_chunk = list_chunk();
    const auto sig = parse_wav(make_wav({100, -100}, spec));
    REQUIRE(sig.size() == 2);
    CHECK(sig.samples[0] == 100 / 32768.0);
}

TEST_CASE("unsupported wav layouts are rejected by field", "[io][wav]") {
    using Catch::Matchers::ContainsSubstring;
    WavSpec stereo;
    stereo.channels = 2;
    CHECK_THROWS_WITH(parse_wav(make_wav({1, 2}, stereo)), ContainsSubstring("channels"));
    WavSpec flt;
    flt.format = 3;
    CHECK_THROWS_WITH(parse_wav(make_wav({1, 2}, flt)), ContainsSubstring("audio_format"));
    WavSpec wide;
    wide.bits = 24;
    CHECK_THROWS_WITH(parse_wav(make_wav({1, 2}, wide)), ContainsSubstring("bits_per_sample"));
}

TEST_CASE("malformed wav files", "[io][wav]") {
    auto good = make_wav({1, 2, 3});
    auto truncated = good;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(parse_wav(truncated), FormatError);
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(parse_wav(bad_magic), FormatError);
    CHECK_THROWS_AS(parse_wav(std::vector<std::uint8_t>(good.begin(), good.begin() + 20)), FormatError);
    CHECK_THROWS_AS(read_wav("/nonexistent/gbtmark.wav"), IoError);
}

TEST_CASE("pbm parsing", "[io][pbm]") {
    const auto img = parse_pbm("P1\n# comment\n3 2\n1 0 1\n0 1 0\n");
    CHECK(img.width == 3);
    CHECK(img.height == 2);
    CHECK(img.bits == std::vector<std::uint8_t>{1, 0, 1, 0, 1, 0});
    CHECK(img.at(1, 1) == 1);

    // Packed raster and comments between dimensions.
    const auto packed = parse_pbm("P1 # c\n2 # w\n2\n1001");
    CHECK(packed.bits == std::vector<std::uint8_t>{1, 0, 0, 1});
}

TEST_CASE("pbm round trip", "[io][pbm]") {
    const auto wm = testing::random_watermark(25, 25, 4);
    CHECK(parse_pbm(encode_pbm(wm)) == wm);
    const auto logo = testing::logo_watermark();
    const auto dir = scratch("pbm");
    write_pbm(dir / "logo.pbm", logo);
    CHECK(read_pbm(dir / "logo.pbm") == logo);
    fs::remove_all(dir);
}

TEST_CASE("pbm errors", "[io][pbm]") {
    CHECK_THROWS_AS(parse_pbm("P4\n1 1\n1"), FormatError);
    CHECK_THROWS_AS(parse_pbm("P1\n0 3\n"), FormatError);
    CHECK_THROWS_AS(parse_pbm("P1\n5000 1\n"), FormatError);
    CHECK_THROWS_AS(parse_pbm("P1\n2 2\n1 0 1"), FormatError);
    CHECK_THROWS_AS(parse_pbm("P1\n2 1\n1 2"), FormatError);
    CHECK_THROWS_AS(parse_pbm("P1\n2\n"), FormatError);
}

TEST_CASE("key round trip is bit exact", "[io][key]") {
    auto key = sample_key(625, 11);
    key.params.ws = 0.05;
    key.params.graph.w2 = 0.3;
    key.records[3].s_max_original = 0.1 + 0.2; // not representable in short decimal
    key.records[4].s_max_original = std::nextafter(1.0, 2.0);
    const auto parsed = parse_key(encode_key(key));
    CHECK(parsed == key);
    for (std::size_t i = 0; i < key.records.size(); ++i)
        REQUIRE(parsed.records[i].s_max_original == key.records[i].s_max_original);

    const auto dir = scratch("key");
    write_key(dir / "k.txt", key);
    CHECK(read_key(dir / "k.txt") == key);
    fs::remove_all(dir);
}

TEST_CASE("key parser tolerates trailing blank lines and CRLF", "[io][key]") {
    const auto key = sample_key(50, 12);
    std::string crlf;
    for (char c : encode_key(key)) {
        if (c == '\n')
            crlf += '\r';
        crlf += c;
    }
    CHECK(parse_key(encode_key(key) + "\n\n") == key);
    CHECK(parse_key(crlf) == key);
}

TEST_CASE("corrupt keys", "[io][key]") {
    const auto key = sample_key(50, 13);
    const std::string text = encode_key(key);

    // Truncated: drop the last record.
    CHECK_THROWS_AS(parse_key(text.substr(0, text.rfind('\n', text.size() - 2) + 1)), KeyError);
    CHECK_THROWS_AS(parse_key(text.substr(0, 30)), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 1, "version 2")), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 4, "ws 0.05 extra")), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 4, "strength 0.05")), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 4, "ws abc")), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 3, "frame_size 0")), KeyError);
    // Record indices must increase.
    const auto first = std::to_string(key.records[0].frame_index);
    CHECK_THROWS_AS(parse_key(with_line(text, 11, first + " 1.0")), KeyError);
    // Ineligible singular value.
    CHECK_THROWS_AS(parse_key(with_line(text, 10, first + " 0.01")), KeyError);
    CHECK_THROWS_AS(parse_key(with_line(text, 10, first + " nan")), KeyError);
    CHECK_THROWS_AS(read_key("/nonexistent/gbtmark.key"), IoError);
}
