// gbtmark: embed, extract, attack and benchmark GBT-SVD audio watermarks.
//
// Exit status: 0 success, 1 usage or validation error, 2 I/O error,
// 3 external tool (MP3 codec) failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "gbtmark/gbtmark.hpp"

namespace fs = std::filesystem;
using namespace gbtmark;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kExternal = 3 };

struct ParamFlags {
    std::size_t frame_size = 10;
    double ws = 0.05;
    double coeff_fraction = 0.4;
    double w1 = 1.0;
    double w2 = 0.3;

    void attach(CLI::App& app) {
        app.add_option("--frame-size", frame_size, "samples per frame")->capture_default_str();
        app.add_option("--ws", ws, "watermark strength")->capture_default_str();
        app.add_option("--coeff-fraction", coeff_fraction, "fraction of leading GBT coefficients used")
            ->capture_default_str();
        app.add_option("--w1", w1, "graph weight between adjacent samples")->capture_default_str();
        app.add_option("--w2", w2, "graph weight between samples two apart")->capture_default_str();
    }

    EmbedParams params() const {
        EmbedParams p;
        p.ws = ws;
        p.coeff_fraction = coeff_fraction;
        p.graph = {frame_size, w1, w2};
        p.validate();
        return p;
    }
};

struct CodecFlags {
    std::string encode;
    std::string decode;

    void attach(CLI::App& app) {
        app.add_option("--codec-encode", encode,
                       "MP3 encode command template with {in} {out} {bitrate} (env " +
                           std::string(CodecCommand::kEncodeEnv) + ")");
        app.add_option("--codec-decode", decode,
                       "MP3 decode command template with {in} {out} (env " + std::string(CodecCommand::kDecodeEnv) +
                           ")");
    }

    CodecCommand command() const {
        CodecCommand codec = CodecCommand::from_environment();
        if (!encode.empty())
            codec.encode_template = encode;
        if (!decode.empty())
            codec.decode_template = decode;
        return codec;
    }
};

// Scratch directory removed on scope exit.
class ScratchDir {
public:
    ScratchDir() {
        std::string pattern = (fs::temp_directory_path() / "gbtmark-XXXXXX").string();
        if (!mkdtemp(pattern.data()))
            throw IoError("cannot create a temporary directory");
        path_ = pattern;
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

std::string fmt_db(double v) {
    if (std::isinf(v))
        return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

int run_embed(const std::string& host_path, const std::string& wm_path, const std::string& out_wav,
              const std::string& out_key, const ParamFlags& flags) {
    const EmbedParams params = flags.params();
    const AudioSignal host = read_wav(host_path);
    const WatermarkImage watermark = read_pbm(wm_path);
    const WatermarkedResult result = embed(host, watermark, params);
    write_wav(out_wav, result.signal);
    write_key(out_key, result.key);

    const QualityReport quality = psnr(host, result.signal);
    std::cout << "PSNR: " << fmt_db(quality.psnr_db) << " dB\n"
              << "SNR: " << fmt_db(quality.snr_db) << " dB\n"
              << "payload: " << payload(host.sample_rate, params.graph.frame_size) << " bits/s\n"
              << "embedded bits: " << watermark.size() << " (" << watermark.width << "x" << watermark.height
              << "), key records: " << result.key.records.size() << "\n";
    return kOk;
}

int run_extract(const std::string& wav_path, const std::string& key_path, const std::string& out_pbm,
                const std::string& reference) {
    const EmbeddingKey key = read_key(key_path);
    const AudioSignal signal = read_wav(wav_path);
    const WatermarkImage extracted = extract(signal, key);
    write_pbm(out_pbm, extracted);
    if (!reference.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", ber(read_pbm(reference), extracted));
        std::cout << "BER: " << buf << "\n";
    }
    return kOk;
}

int run_attack(const std::string& in, const std::string& out, const AttackSpec& spec, const CodecFlags& codec) {
    const AudioSignal signal = read_wav(in);
    AudioSignal attacked;
    if (spec.kind == AttackKind::mp3) {
        ScratchDir scratch;
        attacked = apply_attack(signal, spec, codec.command(), scratch.path());
    } else {
        attacked = apply_attack(signal, spec);
    }
    write_wav(out, attacked);
    return kOk;
}

int run_benchmark_cmd(const std::string& corpus_dir, const std::string& wm_path, const std::string& out_csv,
                      const ParamFlags& flags, std::uint64_t seed, const CodecFlags& codec, bool markdown) {
    BenchmarkOptions options;
    options.params = flags.params();
    options.seed = seed;
    options.codec = codec.command();
    const auto corpus = load_corpus(corpus_dir);
    const WatermarkImage watermark = read_pbm(wm_path);

    ScratchDir scratch;
    options.workdir = scratch.path();
    const BenchmarkReport report = run_benchmark(corpus, watermark, options);
    for (const auto& d : report.diagnostics)
        std::cerr << "skipped: " << d << "\n";

    std::FILE* f = std::fopen(out_csv.c_str(), "wb");
    if (!f)
        throw IoError("cannot open " + out_csv + " for writing");
    const std::string csv = render_csv(report);
    const bool ok = std::fwrite(csv.data(), 1, csv.size(), f) == csv.size();
    if (std::fclose(f) != 0 || !ok)
        throw IoError("failed writing " + out_csv);

    if (markdown)
        std::cout << render_markdown(report);
    return kOk;
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ExternalToolError*>(&e))
        return kExternal;
    if (dynamic_cast<const IoError*>(&e))
        return kIo;
    return kUsage;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GBT-SVD audio watermarking"};
    app.require_subcommand(1);

    ParamFlags params;
    CodecFlags codec;
    std::string host, watermark, out_wav, out_key, wav, key, out_pbm, reference, corpus, out_csv;
    std::uint64_t seed = 0;
    bool markdown = false;

    auto* embed_cmd = app.add_subcommand("embed", "embed a PBM watermark into a WAV file");
    embed_cmd->add_option("host", host, "host WAV (PCM16 mono)")->required();
    embed_cmd->add_option("watermark", watermark, "watermark image (plain PBM)")->required();
    embed_cmd->add_option("out_wav", out_wav, "watermarked WAV output")->required();
    embed_cmd->add_option("out_key", out_key, "embedding key output")->required();
    params.attach(*embed_cmd);

    auto* extract_cmd = app.add_subcommand("extract", "extract a watermark using its key");
    extract_cmd->add_option("wav", wav, "watermarked (possibly attacked) WAV")->required();
    extract_cmd->add_option("key", key, "embedding key")->required();
    extract_cmd->add_option("out_pbm", out_pbm, "extracted watermark output (PBM)")->required();
    extract_cmd->add_option("--reference", reference, "original watermark; prints BER");

    auto* attack_cmd = app.add_subcommand("attack", "apply one attack to a WAV file");
    attack_cmd->require_subcommand(1);
    std::string attack_in, attack_out;
    AttackSpec spec;
    auto add_attack = [&](const char* name, AttackKind kind, const char* option, const char* help) {
        auto* sub = attack_cmd->add_subcommand(name, help);
        sub->add_option("input", attack_in, "input WAV")->required();
        sub->add_option("output", attack_out, "attacked WAV output")->required();
        if (option)
            sub->add_option(option, spec.parameter, help)->required();
        sub->callback([&spec, kind] { spec.kind = kind; });
        return sub;
    };
    auto* awgn_cmd = add_attack("awgn", AttackKind::awgn, "--snr", "additive white Gaussian noise at an SNR in dB");
    awgn_cmd->add_option("--seed", spec.seed, "noise generator seed")->capture_default_str();
    auto* mp3_cmd = add_attack("mp3", AttackKind::mp3, "--bitrate", "MP3 round trip at 16, 32 or 64 kbps");
    codec.attach(*mp3_cmd);
    add_attack("lpf", AttackKind::lowpass, "--cutoff", "lowpass filter cutoff in Hz")->alias("lowpass");
    add_attack("hpf", AttackKind::highpass, "--cutoff", "highpass filter cutoff in Hz")->alias("highpass");
    add_attack("resample", AttackKind::resample, "--rate", "down/up resampling via an intermediate rate in Hz");
    add_attack("requant", AttackKind::requantize, "--bits", "requantize to a bit depth")->alias("requantize");
    add_attack("as", AttackKind::amplitude_scale, "--factor", "amplitude scaling factor")->alias("amplitude_scale");
    add_attack("crop", AttackKind::crop, "--fraction", "remove a leading fraction of the signal");

    auto* bench_cmd = app.add_subcommand("benchmark", "run the attack grid over a corpus and write CSV");
    bench_cmd->add_option("corpus", corpus, "directory of WAV files")->required();
    bench_cmd->add_option("watermark", watermark, "watermark image (plain PBM)")->required();
    bench_cmd->add_option("out_csv", out_csv, "CSV report output")->required();
    bench_cmd->add_option("--seed", seed, "AWGN seed")->capture_default_str();
    bench_cmd->add_flag("--markdown", markdown, "also print a Markdown summary table");
    params.attach(*bench_cmd);
    codec.attach(*bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*embed_cmd)
            return run_embed(host, watermark, out_wav, out_key, params);
        if (*extract_cmd)
            return run_extract(wav, key, out_pbm, reference);
        if (*attack_cmd)
            return run_attack(attack_in, attack_out, spec, codec);
        if (*bench_cmd)
            return run_benchmark_cmd(corpus, watermark, out_csv, params, seed, codec, markdown);
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}
