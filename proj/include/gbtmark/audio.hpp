#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gbtmark/error.hpp"

namespace gbtmark {

/// Mono signal with samples in [-1, 1].
struct AudioSignal {
    std::vector<double> samples;
    int sample_rate = 8000;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::span<const double> view() const noexcept { return samples; }

    double duration_seconds() const noexcept {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

inline double clamp_unit(double x) noexcept { return std::clamp(x, -1.0, 1.0); }

inline void clamp_unit(std::span<double> xs) noexcept {
    for (double& x : xs)
        x = clamp_unit(x);
}

inline double mean_power(std::span<const double> xs) noexcept {
    if (xs.empty())
        return 0.0;
    double acc = 0.0;
    for (double x : xs)
        acc += x * x;
    return acc / static_cast<double>(xs.size());
}

inline void require_valid(const AudioSignal& signal) {
    if (signal.sample_rate <= 0)
        throw ValidationError("sample rate must be positive");
    if (signal.empty())
        throw ValidationError("audio signal is empty");
    for (double x : signal.samples)
        if (!std::isfinite(x))
            throw ValidationError("audio signal contains a non-finite sample");
}

} // namespace gbtmark
