#pragma once

// Signal attacks used to probe watermark robustness. Every attack keeps the
// input length and sample rate and returns samples clamped to [-1, 1].

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gbtmark/audio.hpp"
#include "gbtmark/dsp.hpp"
#include "gbtmark/error.hpp"
#include "gbtmark/io.hpp"

namespace gbtmark {

namespace detail {

inline AudioSignal with_samples(const AudioSignal& like, std::vector<double> samples) {
    AudioSignal out{std::move(samples), like.sample_rate};
    clamp_unit(out.samples);
    return out;
}

} // namespace detail

inline AudioSignal awgn(const AudioSignal& signal, double snr_db, std::uint64_t seed) {
    require_valid(signal);
    if (!std::isfinite(snr_db))
        throw ValidationError("SNR must be finite");
    const double power = mean_power(signal.view());
    if (!(power > 0.0))
        throw ValidationError("AWGN on a silent signal: SNR is undefined");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, snr_db / 10.0)));
    std::vector<double> out(signal.samples);
    for (double& x : out)
        x += noise(rng);
    return detail::with_samples(signal, std::move(out));
}

/// Cutoff may equal Nyquist, in which case the filter passes everything.
inline AudioSignal lowpass(const AudioSignal& signal, double cutoff_hz) {
    require_valid(signal);
    const double nyquist = signal.sample_rate / 2.0;
    if (!(cutoff_hz > 0.0 && cutoff_hz <= nyquist))
        throw ValidationError("lowpass cutoff must lie in (0, " + detail::format_double(nyquist) + "] Hz");
    const auto h = dsp::design_lowpass(cutoff_hz / signal.sample_rate);
    return detail::with_samples(signal, dsp::filter_zero_phase(signal.view(), h));
}

inline AudioSignal highpass(const AudioSignal& signal, double cutoff_hz) {
    require_valid(signal);
    const double nyquist = signal.sample_rate / 2.0;
    if (!(cutoff_hz > 0.0 && cutoff_hz < nyquist))
        throw ValidationError("highpass cutoff must lie in (0, " + detail::format_double(nyquist) + ") Hz");
    const auto h = dsp::design_highpass(cutoff_hz / signal.sample_rate);
    return detail::with_samples(signal, dsp::filter_zero_phase(signal.view(), h));
}

inline AudioSignal resample_roundtrip(const AudioSignal& signal, int intermediate_rate_hz) {
    require_valid(signal);
    if (intermediate_rate_hz <= 0)
        throw ValidationError("intermediate sample rate must be positive");
    const auto rate = static_cast<std::size_t>(signal.sample_rate);
    const auto mid = static_cast<std::size_t>(intermediate_rate_hz);
    auto down = dsp::resample_poly(signal.view(), mid, rate);
    auto back = dsp::resample_poly(down, rate, mid);
    back.resize(signal.size(), 0.0);
    return detail::with_samples(signal, std::move(back));
}

inline AudioSignal requantize(const AudioSignal& signal, int bits) {
    require_valid(signal);
    if (bits < 2 || bits > 32)
        throw ValidationError("requantization depth must lie in [2, 32] bits");
    const double levels = std::ldexp(1.0, bits - 1) - 1.0;
    std::vector<double> out(signal.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::round(clamp_unit(signal.samples[i]) * levels) / levels;
    return detail::with_samples(signal, std::move(out));
}

inline AudioSignal amplitude_scale(const AudioSignal& signal, double factor) {
    require_valid(signal);
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw ValidationError("amplitude scale factor must be positive");
    std::vector<double> out(signal.samples);
    for (double& x : out)
        x *= factor;
    return detail::with_samples(signal, std::move(out));
}

/// Drop the leading fraction of samples and zero-fill the tail.
inline AudioSignal crop_leading(const AudioSignal& signal, double fraction) {
    require_valid(signal);
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw ValidationError("crop fraction must lie in [0, 1)");
    const auto removed = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(signal.size())));
    std::vector<double> out(signal.size(), 0.0);
    std::copy(signal.samples.begin() + static_cast<std::ptrdiff_t>(removed), signal.samples.end(), out.begin());
    return detail::with_samples(signal, std::move(out));
}

/// Shell command templates for an external MP3 codec. Placeholders:
/// {in}, {out} (shell-quoted paths) and {bitrate} (kbps, encode only).
struct CodecCommand {
    static constexpr std::string_view kDefaultEncode = "lame --quiet -m m -b {bitrate} {in} {out}";
    static constexpr std::string_view kDefaultDecode = "lame --quiet --decode {in} {out}";
    static constexpr const char* kEncodeEnv = "GBTMARK_CODEC_ENCODE";
    static constexpr const char* kDecodeEnv = "GBTMARK_CODEC_DECODE";

    std::string encode_template{kDefaultEncode};
    std::string decode_template{kDefaultDecode};

    static CodecCommand from_environment() {
        CodecCommand codec;
        if (const char* e = std::getenv(kEncodeEnv); e && *e)
            codec.encode_template = e;
        if (const char* d = std::getenv(kDecodeEnv); d && *d)
            codec.decode_template = d;
        return codec;
    }

    void validate() const {
        for (std::string_view ph : {"{in}", "{out}", "{bitrate}"})
            if (encode_template.find(ph) == std::string::npos)
                throw ConfigError("codec encode template lacks placeholder " + std::string(ph));
        for (std::string_view ph : {"{in}", "{out}"})
            if (decode_template.find(ph) == std::string::npos)
                throw ConfigError("codec decode template lacks placeholder " + std::string(ph));
    }
};

namespace detail {

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

inline std::string substitute(std::string text, std::string_view placeholder, const std::string& value) {
    for (auto pos = text.find(placeholder); pos != std::string::npos; pos = text.find(placeholder, pos + value.size()))
        text.replace(pos, placeholder.size(), value);
    return text;
}

inline void run_tool(const std::string& command, const std::filesystem::path& log, std::string_view stage) {
    // Newlines keep a trailing shell comment in the template from eating the ')'.
    const std::string full = "(\n" + command + "\n) >" + shell_quote(log.string()) + " 2>&1";
    const int status = std::system(full.c_str());
    if (status == 0)
        return;

    std::string diagnostics;
    if (std::ifstream in(log); in)
        diagnostics.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (diagnostics.size() > 2000)
        diagnostics = diagnostics.substr(diagnostics.size() - 2000);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::string message = "MP3 " + std::string(stage) + " command failed (exit " + std::to_string(code) + "): " + command;
    if (code == 127)
        message += "\ncodec not found; set --codec-encode/--codec-decode or " + std::string(CodecCommand::kEncodeEnv) +
                   "/" + CodecCommand::kDecodeEnv;
    if (!diagnostics.empty())
        message += "\n" + diagnostics;
    throw ExternalToolError(message);
}

} // namespace detail

/// Lag (within +-max_lag) that best aligns `candidate` onto `reference`:
/// maximizes sum_n reference[n] * candidate[n + lag].
inline std::ptrdiff_t best_alignment_lag(std::span<const double> reference, std::span<const double> candidate,
                                         std::ptrdiff_t max_lag) {
    const auto ref_len = static_cast<std::ptrdiff_t>(reference.size());
    const auto cand_len = static_cast<std::ptrdiff_t>(candidate.size());
    std::ptrdiff_t best_lag = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
        const std::ptrdiff_t hi = std::min(ref_len, cand_len - lag);
        double acc = 0.0;
        for (std::ptrdiff_t n = lo; n < hi; ++n)
            acc += reference[static_cast<std::size_t>(n)] * candidate[static_cast<std::size_t>(n + lag)];
        // Strict comparison plus the |lag| tiebreak keeps lag 0 on flat correlation.
        if (acc > best || (acc == best && std::abs(lag) < std::abs(best_lag))) {
            best = acc;
            best_lag = lag;
        }
    }
    return best_lag;
}

inline constexpr std::ptrdiff_t kMp3AlignmentWindow = 2048;

inline AudioSignal mp3_roundtrip(const AudioSignal& signal, int bitrate_kbps, const CodecCommand& codec,
                                 const std::filesystem::path& workdir) {
    require_valid(signal);
    if (bitrate_kbps != 16 && bitrate_kbps != 32 && bitrate_kbps != 64)
        throw ValidationError("MP3 bitrate must be 16, 32 or 64 kbps");
    codec.validate();

    std::error_code ec;
    std::filesystem::create_directories(workdir, ec);
    if (ec)
        throw IoError("cannot create codec work directory " + workdir.string() + ": " + ec.message());

    const auto wav_in = workdir / "input.wav";
    const auto mp3 = workdir / "encoded.mp3";
    const auto wav_out = workdir / "decoded.wav";
    std::filesystem::remove(wav_out, ec);
    write_wav(wav_in, signal);

    std::string encode = detail::substitute(codec.encode_template, "{in}", detail::shell_quote(wav_in.string()));
    encode = detail::substitute(encode, "{out}", detail::shell_quote(mp3.string()));
    encode = detail::substitute(encode, "{bitrate}", std::to_string(bitrate_kbps));
    detail::run_tool(encode, workdir / "encode.log", "encode");

    std::string decode = detail::substitute(codec.decode_template, "{in}", detail::shell_quote(mp3.string()));
    decode = detail::substitute(decode, "{out}", detail::shell_quote(wav_out.string()));
    detail::run_tool(decode, workdir / "decode.log", "decode");

    AudioSignal decoded;
    try {
        decoded = read_wav(wav_out);
    } catch (const Error& e) {
        throw ExternalToolError(std::string("MP3 decoder output unreadable: ") + e.what());
    }
    std::vector<double> samples = std::move(decoded.samples);
    if (decoded.sample_rate != signal.sample_rate)
        samples = dsp::resample_poly(samples, static_cast<std::size_t>(signal.sample_rate),
                                     static_cast<std::size_t>(decoded.sample_rate));

    const std::ptrdiff_t lag = best_alignment_lag(signal.view(), samples, kMp3AlignmentWindow);
    std::vector<double> aligned(signal.size(), 0.0);
    for (std::size_t n = 0; n < aligned.size(); ++n) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(n) + lag;
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(samples.size()))
            aligned[n] = samples[static_cast<std::size_t>(src)];
    }
    return detail::with_samples(signal, std::move(aligned));
}

enum class AttackKind { none, awgn, mp3, lowpass, highpass, resample, requantize, amplitude_scale, crop };

/// Short label used in CSV reports and on the command line.
inline std::string_view attack_label(AttackKind kind) {
    switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::awgn: return "awgn";
    case AttackKind::mp3: return "mp3";
    case AttackKind::lowpass: return "lpf";
    case AttackKind::highpass: return "hpf";
    case AttackKind::resample: return "resample";
    case AttackKind::requantize: return "requant";
    case AttackKind::amplitude_scale: return "as";
    case AttackKind::crop: return "crop";
    }
    return "?";
}

inline std::optional<AttackKind> parse_attack_label(std::string_view label) {
    for (auto kind : {AttackKind::none, AttackKind::awgn, AttackKind::mp3, AttackKind::lowpass, AttackKind::highpass,
                      AttackKind::resample, AttackKind::requantize, AttackKind::amplitude_scale, AttackKind::crop})
        if (attack_label(kind) == label)
            return kind;
    return std::nullopt;
}

/// `parameter` means snr_db, bitrate_kbps, cutoff_hz, intermediate_rate_hz,
/// bits, factor or leading fraction depending on `kind`.
struct AttackSpec {
    AttackKind kind = AttackKind::none;
    double parameter = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        auto integral = [this] { return std::floor(parameter) == parameter; };
        switch (kind) {
        case AttackKind::none:
            return;
        case AttackKind::awgn:
            if (!std::isfinite(parameter))
                throw ValidationError("AWGN SNR must be finite");
            return;
        case AttackKind::mp3:
            if (parameter != 16 && parameter != 32 && parameter != 64)
                throw ValidationError("MP3 bitrate must be 16, 32 or 64 kbps");
            return;
        case AttackKind::lowpass:
        case AttackKind::highpass:
            if (!(parameter > 0.0) || !std::isfinite(parameter))
                throw ValidationError("filter cutoff must be positive");
            return;
        case AttackKind::resample:
            if (!(parameter > 0.0) || !integral() || parameter > 1e6)
                throw ValidationError("intermediate sample rate must be a positive integer");
            return;
        case AttackKind::requantize:
            if (!integral() || parameter < 2 || parameter > 32)
                throw ValidationError("requantization depth must be an integer in [2, 32]");
            return;
        case AttackKind::amplitude_scale:
            if (!(parameter > 0.0) || !std::isfinite(parameter))
                throw ValidationError("amplitude scale factor must be positive");
            return;
        case AttackKind::crop:
            if (!(parameter >= 0.0 && parameter < 1.0))
                throw ValidationError("crop fraction must lie in [0, 1)");
            return;
        }
    }
};

inline AudioSignal apply_attack(const AudioSignal& signal, const AttackSpec& spec, const CodecCommand& codec = {},
                                const std::filesystem::path& workdir = {}) {
    spec.validate();
    switch (spec.kind) {
    case AttackKind::none: return signal;
    case AttackKind::awgn: return awgn(signal, spec.parameter, spec.seed);
    case AttackKind::mp3: {
        if (workdir.empty())
            throw ConfigError("MP3 attack needs a work directory");
        return mp3_roundtrip(signal, static_cast<int>(spec.parameter), codec, workdir);
    }
    case AttackKind::lowpass: return lowpass(signal, spec.parameter);
    case AttackKind::highpass: return highpass(signal, spec.parameter);
    case AttackKind::resample: return resample_roundtrip(signal, static_cast<int>(spec.parameter));
    case AttackKind::requantize: return requantize(signal, static_cast<int>(spec.parameter));
    case AttackKind::amplitude_scale: return amplitude_scale(signal, spec.parameter);
    case AttackKind::crop: return crop_leading(signal, spec.parameter);
    }
    throw ValidationError("unknown attack kind");
}

} // namespace gbtmark
