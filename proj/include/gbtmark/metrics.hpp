#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "gbtmark/audio.hpp"
#include "gbtmark/error.hpp"
#include "gbtmark/watermark.hpp"

namespace gbtmark {

/// PSNR uses a full-scale peak of 1.0. A perfect match reports +inf.
struct QualityReport {
    double psnr_db = 0.0;
    double snr_db = 0.0;
    double mse = 0.0;
};

inline QualityReport psnr(const AudioSignal& reference, const AudioSignal& test) {
    if (reference.size() != test.size())
        throw ValidationError("PSNR needs equal lengths");
    if (reference.sample_rate != test.sample_rate)
        throw ValidationError("PSNR needs equal sample rates");
    if (reference.empty())
        throw ValidationError("PSNR of empty signals is undefined");

    double err = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.samples[i] - test.samples[i];
        err += d * d;
    }
    QualityReport report;
    report.mse = err / static_cast<double>(reference.size());
    if (report.mse == 0.0) {
        report.psnr_db = report.snr_db = std::numeric_limits<double>::infinity();
        return report;
    }
    report.psnr_db = 10.0 * std::log10(1.0 / report.mse);
    report.snr_db = 10.0 * std::log10(mean_power(reference.view()) / report.mse);
    return report;
}

inline double ber(const WatermarkImage& original, const WatermarkImage& extracted) {
    if (original.width != extracted.width || original.height != extracted.height ||
        original.bits.size() != extracted.bits.size())
        throw ValidationError("BER needs watermarks of equal dimensions");
    if (original.bits.empty())
        throw ValidationError("BER of an empty watermark is undefined");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < original.bits.size(); ++i)
        wrong += original.bits[i] != extracted.bits[i];
    return static_cast<double>(wrong) / static_cast<double>(original.bits.size());
}

/// Embeddable bits per second: one bit per frame.
inline double payload(double sample_rate_hz, std::size_t frame_size) {
    if (!(sample_rate_hz > 0.0) || frame_size == 0)
        throw ValidationError("payload needs a positive sample rate and frame size");
    return sample_rate_hz / static_cast<double>(frame_size);
}

} // namespace gbtmark
