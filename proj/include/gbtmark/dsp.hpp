#pragma once

// Windowed-sinc FIR filtering and rational-ratio resampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "gbtmark/error.hpp"

namespace gbtmark::dsp {

inline double sinc(double x) noexcept {
    if (x == 0.0)
        return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

/// 127-tap linear-phase filters: integer group delay of 63 samples.
inline constexpr std::size_t kFirTaps = 127;

inline std::vector<double> hamming(std::size_t taps) {
    std::vector<double> w(taps);
    const double denom = static_cast<double>(taps - 1);
    for (std::size_t n = 0; n < taps; ++n)
        w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    return w;
}

/// Unity-DC-gain Hamming windowed-sinc lowpass; cutoff is a fraction of the
/// sample rate in (0, 0.5]. At 0.5 the filter degenerates to a pure delay.
inline std::vector<double> design_lowpass(double cutoff, std::size_t taps = kFirTaps) {
    if (!(cutoff > 0.0 && cutoff <= 0.5))
        throw ValidationError("normalized cutoff must lie in (0, 0.5]");
    if (taps % 2 == 0)
        throw ValidationError("FIR tap count must be odd");
    std::vector<double> h(taps);
    if (cutoff == 0.5) {
        // Full band: the sinc zeros fall on integers, leaving a unit delay.
        h[(taps - 1) / 2] = 1.0;
        return h;
    }
    const auto window = hamming(taps);
    const double centre = static_cast<double>(taps - 1) / 2.0;
    for (std::size_t n = 0; n < taps; ++n)
        h[n] = 2.0 * cutoff * sinc(2.0 * cutoff * (static_cast<double>(n) - centre)) * window[n];
    const double gain = std::accumulate(h.begin(), h.end(), 0.0);
    for (double& v : h)
        v /= gain;
    return h;
}

/// Spectral inversion of the lowpass; zero response at DC.
inline std::vector<double> design_highpass(double cutoff, std::size_t taps = kFirTaps) {
    if (!(cutoff > 0.0 && cutoff < 0.5))
        throw ValidationError("normalized highpass cutoff must lie in (0, 0.5)");
    auto h = design_lowpass(cutoff, taps);
    for (double& v : h)
        v = -v;
    h[(taps - 1) / 2] += 1.0;
    return h;
}

/// Convolve and advance by the group delay so output i aligns with input i.
/// Samples outside the input are zero; output length equals input length.
inline std::vector<double> filter_zero_phase(std::span<const double> x, std::span<const double> h) {
    const auto len = static_cast<std::ptrdiff_t>(x.size());
    const auto taps = static_cast<std::ptrdiff_t>(h.size());
    const std::ptrdiff_t delay = (taps - 1) / 2;
    std::vector<double> y(x.size(), 0.0);
    for (std::ptrdiff_t n = 0; n < len; ++n) {
        double acc = 0.0;
        for (std::ptrdiff_t k = 0; k < taps; ++k) {
            const std::ptrdiff_t idx = n + delay - k;
            if (idx >= 0 && idx < len)
                acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(idx)];
        }
        y[static_cast<std::size_t>(n)] = acc;
    }
    return y;
}

inline double kaiser(double position, double half_width, double beta) {
    const double r = position / half_width;
    if (std::abs(r) > 1.0)
        return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

/// Polyphase windowed-sinc resampler by up/down (reduced by their gcd).
///
/// The prototype lowpass runs at the upsampled rate with cutoff at the lower
/// of the two Nyquist frequencies, spans 10 zero crossings of the slower
/// rate on each side (Kaiser, beta 5) and is centred so there is no delay.
/// Each polyphase branch is normalized to unity DC gain. Output has
/// ceil(len * up / down) samples.
inline std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
    if (up == 0 || down == 0)
        throw ValidationError("resampling factors must be positive");
    const std::size_t g = std::gcd(up, down);
    up /= g;
    down /= g;
    if (up == 1 && down == 1)
        return {x.begin(), x.end()};

    constexpr double kBeta = 5.0;
    const std::size_t ratio = std::max(up, down);
    const auto half = static_cast<std::ptrdiff_t>(10 * ratio);
    const double cutoff = 0.5 / static_cast<double>(ratio);

    std::vector<double> proto(static_cast<std::size_t>(2 * half + 1));
    for (std::ptrdiff_t j = -half; j <= half; ++j)
        proto[static_cast<std::size_t>(j + half)] = 2.0 * cutoff * sinc(2.0 * cutoff * static_cast<double>(j)) *
                                                    kaiser(static_cast<double>(j), static_cast<double>(half), kBeta);

    // Branch p serves outputs whose upsampled position is congruent to p mod up.
    const auto L = static_cast<std::ptrdiff_t>(up);
    const auto M = static_cast<std::ptrdiff_t>(down);
    std::vector<double> branch_gain(up, 0.0);
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const auto p = static_cast<std::size_t>(((j % L) + L) % L);
        branch_gain[p] += proto[static_cast<std::size_t>(j + half)];
    }

    const auto len = static_cast<std::ptrdiff_t>(x.size());
    const std::size_t out_len = (x.size() * up + down - 1) / down;
    std::vector<double> y(out_len, 0.0);
    for (std::size_t m = 0; m < out_len; ++m) {
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(m) * M;
        std::ptrdiff_t n_lo = (t - half + L - 1) / L;
        if (t - half < 0)
            n_lo = -((half - t) / L);
        const std::ptrdiff_t n_hi = (t + half) / L;
        double acc = 0.0;
        for (std::ptrdiff_t n = std::max<std::ptrdiff_t>(n_lo, 0); n <= std::min(n_hi, len - 1); ++n)
            acc += x[static_cast<std::size_t>(n)] * proto[static_cast<std::size_t>(t - n * L + half)];
        y[m] = acc / branch_gain[static_cast<std::size_t>(t % L)];
    }
    return y;
}

} // namespace gbtmark::dsp
