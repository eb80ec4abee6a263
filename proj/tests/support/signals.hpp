#pragma once

// Synthetic test material: AR(1) noise, tones and a speech-like generator
// (voiced syllables with formant-shaped harmonics, fricatives and pauses,
// band-limited roughly like telephone speech).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "gbtmark/audio.hpp"
#include "gbtmark/watermark.hpp"

namespace gbtmark::testing {

inline AudioSignal ar1_noise(std::size_t length, double coeff, double sigma, std::uint64_t seed, int rate = 8000) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> innovation(0.0, sigma);
    AudioSignal s{std::vector<double>(length), rate};
    double prev = 0.0;
    for (double& x : s.samples) {
        prev = coeff * prev + innovation(rng);
        x = clamp_unit(prev);
    }
    return s;
}

inline AudioSignal tone(double freq_hz, double amplitude, std::size_t length, int rate = 8000, double offset = 0.0) {
    AudioSignal s{std::vector<double>(length), rate};
    for (std::size_t n = 0; n < length; ++n)
        s.samples[n] = offset + amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(n) / rate);
    return s;
}

inline double rms(std::span<const double> xs) { return std::sqrt(mean_power(xs)); }

inline AudioSignal speech_like(double seconds, std::uint64_t seed, double target_rms = 0.06, int rate = 8000) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto length = static_cast<std::size_t>(seconds * rate);
    std::vector<double> out(length, 0.0);
    const double fs = rate;
    std::size_t pos = 0;

    auto formant_gain = [](double f, double f1, double f2, double f3) {
        auto peak = [f](double centre, double bw) { return 1.0 / (1.0 + std::pow((f - centre) / bw, 2)); };
        const double low_cut = std::pow(f / 250.0, 2) / (1.0 + std::pow(f / 250.0, 2));
        return low_cut * (peak(f1, 90.0) + 0.5 * peak(f2, 130.0) + 0.25 * peak(f3, 200.0));
    };

    while (pos < length) {
        pos += static_cast<std::size_t>(uniform(0.04, 0.16) * fs);
        if (pos >= length)
            break;

        if (uniform(0.0, 1.0) < 0.25) {
            // Fricative: differenced noise burst.
            const auto dur = static_cast<std::size_t>(uniform(0.06, 0.15) * fs);
            const double amp = uniform(0.04, 0.08);
            double prev = 0.0;
            for (std::size_t i = 0; i < dur && pos + i < length; ++i) {
                const double w = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(dur));
                const double e = gauss(rng);
                out[pos + i] += amp * w * (e - prev);
                prev = e;
            }
            pos += dur;
            continue;
        }

        const auto dur = static_cast<std::size_t>(uniform(0.12, 0.30) * fs);
        const double f0_start = uniform(95.0, 210.0);
        const double f0_end = f0_start * uniform(0.85, 1.15);
        const double f1 = uniform(300.0, 800.0), f2 = uniform(900.0, 2200.0), f3 = uniform(2300.0, 3200.0);
        const double amp = uniform(0.5, 1.0);
        std::vector<double> phase(64, 0.0);
        for (auto& p : phase)
            p = uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < dur && pos + i < length; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(dur);
            const double f0 = f0_start + (f0_end - f0_start) * frac;
            const double env = amp * std::pow(std::sin(std::numbers::pi * frac), 0.7);
            double acc = 0.0;
            for (std::size_t h = 1; h < phase.size(); ++h) {
                const double f = f0 * static_cast<double>(h);
                if (f > 0.47 * fs)
                    break;
                phase[h] += 2.0 * std::numbers::pi * f / fs;
                acc += formant_gain(f, f1, f2, f3) / static_cast<double>(h) * std::sin(phase[h]);
            }
            out[pos + i] += env * acc;
        }
        pos += dur;
    }

    for (double& x : out)
        x += 1e-3 * gauss(rng);
    const double scale = target_rms / rms(out);
    for (double& x : out)
        x = clamp_unit(x * scale);
    return AudioSignal{std::move(out), rate};
}

inline WatermarkImage random_watermark(std::size_t width, std::size_t height, std::uint64_t seed,
                                       double p_one = 0.5) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p_one);
    std::vector<std::uint8_t> bits(width * height);
    for (auto& b : bits)
        b = coin(rng) ? 1 : 0;
    return WatermarkImage(width, height, std::move(bits));
}

/// Mostly-black 25x25 logo: a filled square with a white cross cut out.
inline WatermarkImage logo_watermark() {
    constexpr std::size_t n = 25;
    std::vector<std::uint8_t> bits(n * n, 0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const bool cross = (r >= 11 && r <= 13) || (c >= 11 && c <= 13);
            bits[r * n + c] = cross ? 0 : 1;
        }
    return WatermarkImage(n, n, std::move(bits));
}

} // namespace gbtmark::testing
