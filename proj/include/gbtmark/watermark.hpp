#pragma once

// Non-blind GBT-SVD watermarking: one bit per high-energy frame.
//
// For each carrier frame the leading k GBT coefficients are reshaped into a
// small matrix whose largest singular value is shifted by +ws (bit 1) or
// -ws (bit 0). The key keeps the original singular value so extraction can
// compare against it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gbtmark/audio.hpp"
#include "gbtmark/error.hpp"
#include "gbtmark/gbt.hpp"

namespace gbtmark {

struct EmbedParams {
    double ws = 0.05;
    double coeff_fraction = 0.4;
    GraphConfig graph{};

    /// Number of leading coefficients carrying the mark, round-half-up.
    std::size_t coefficient_count() const noexcept {
        return static_cast<std::size_t>(
            std::floor(coeff_fraction * static_cast<double>(graph.frame_size) + 0.5));
    }

    void validate() const {
        graph.validate();
        if (!(ws > 0.0) || !std::isfinite(ws))
            throw ConfigError("watermark strength must be positive and finite");
        if (!(coeff_fraction > 0.0 && coeff_fraction <= 1.0))
            throw ConfigError("coeff_fraction must lie in (0, 1]");
        if (coefficient_count() < 1)
            throw ConfigError("coeff_fraction selects no coefficients for frame size " +
                              std::to_string(graph.frame_size));
    }

    friend bool operator==(const EmbedParams&, const EmbedParams&) = default;
};

/// Binary payload, row-major, bit 1 = black pixel.
struct WatermarkImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> bits;

    WatermarkImage() = default;
    WatermarkImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> b)
        : width(w), height(h), bits(std::move(b)) {
        validate();
    }

    std::size_t size() const noexcept { return bits.size(); }

    std::uint8_t at(std::size_t row, std::size_t col) const { return bits.at(row * width + col); }

    void validate() const {
        if (width == 0 || height == 0)
            throw ValidationError("watermark dimensions must be positive");
        if (bits.size() != width * height)
            throw ValidationError("watermark has " + std::to_string(bits.size()) + " bits, expected " +
                                  std::to_string(width * height));
        for (auto b : bits)
            if (b > 1)
                throw ValidationError("watermark bits must be 0 or 1");
    }

    friend bool operator==(const WatermarkImage&, const WatermarkImage&) = default;
};

struct FrameRecord {
    std::size_t frame_index = 0;
    double s_max_original = 0.0;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Side information needed to extract a mark (record i carries bit i).
struct EmbeddingKey {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    int sample_rate = 8000;
    EmbedParams params{};
    std::size_t watermark_width = 0;
    std::size_t watermark_height = 0;
    std::vector<FrameRecord> records;

    void validate() const {
        if (format_version != kFormatVersion)
            throw KeyError("unsupported key version " + std::to_string(format_version));
        if (sample_rate <= 0)
            throw KeyError("key sample rate must be positive");
        try {
            params.validate();
        } catch (const ConfigError& e) {
            throw KeyError(std::string("key parameters invalid: ") + e.what());
        }
        if (watermark_width == 0 || watermark_height == 0)
            throw KeyError("key watermark dimensions must be positive");
        if (records.size() != watermark_width * watermark_height)
            throw KeyError("key holds " + std::to_string(records.size()) + " records for a " +
                           std::to_string(watermark_width) + "x" + std::to_string(watermark_height) +
                           " watermark");
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (i > 0 && records[i].frame_index <= records[i - 1].frame_index)
                throw KeyError("key frame indices are not strictly increasing at record " + std::to_string(i));
            if (!std::isfinite(records[i].s_max_original) || !(records[i].s_max_original > params.ws))
                throw KeyError("key record " + std::to_string(i) + " has an ineligible singular value");
        }
    }

    friend bool operator==(const EmbeddingKey&, const EmbeddingKey&) = default;
};

struct WatermarkedResult {
    AudioSignal signal;
    EmbeddingKey key;
};

inline std::size_t frame_count(std::size_t length, std::size_t frame_size) noexcept {
    return frame_size == 0 ? 0 : length / frame_size;
}

inline std::vector<std::span<const double>> frame_signal(const AudioSignal& signal, std::size_t frame_size) {
    if (frame_size == 0)
        throw ValidationError("frame size must be positive");
    if (signal.size() < frame_size)
        throw ValidationError("signal of " + std::to_string(signal.size()) +
                              " samples is shorter than one frame of " + std::to_string(frame_size));
    const std::size_t count = frame_count(signal.size(), frame_size);
    std::vector<std::span<const double>> frames;
    frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        frames.push_back(signal.view().subspan(i * frame_size, frame_size));
    return frames;
}

inline double frame_energy(std::span<const double> frame) noexcept {
    double energy = 0.0;
    for (double x : frame)
        energy += x * x;
    return energy;
}

/// Row-major reshape into r x (k/r), r the largest divisor of k not above sqrt(k).
inline Eigen::MatrixXd reshape_for_svd(std::span<const double> coeffs) {
    const std::size_t k = coeffs.size();
    if (k == 0)
        throw ValidationError("cannot reshape an empty coefficient vector");
    std::size_t rows = 1;
    for (std::size_t r = 1; r * r <= k; ++r)
        if (k % r == 0)
            rows = r;
    const std::size_t cols = k / rows;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = coeffs[r * cols + c];
    return m;
}

namespace detail {

inline Eigen::MatrixXd leading_block(const Coefficients& coeffs, std::size_t k) {
    return reshape_for_svd(std::span<const double>(coeffs.data(), k));
}

inline double largest_singular_value(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

} // namespace detail

/// Largest singular value of the leading-k coefficient matrix of a frame.
inline double frame_s_max(std::span<const double> frame, std::size_t k, const TransformPlan& plan) {
    if (k == 0 || k > plan.frame_size())
        throw ValidationError("coefficient count out of range");
    return detail::largest_singular_value(detail::leading_block(plan.forward(frame), k));
}

/// Indices (ascending) of the bit_count highest-energy frames whose
/// s_max exceeds ws. Energy ties prefer the lower index.
inline std::vector<std::size_t> select_frames(const AudioSignal& signal, const EmbedParams& params,
                                              std::size_t bit_count, const TransformPlan& plan) {
    params.validate();
    if (bit_count == 0)
        throw ValidationError("bit_count must be at least 1");
    if (plan.config() != params.graph)
        throw ConfigError("transform plan does not match embedding parameters");
    if (signal.size() < plan.frame_size())
        throw CapacityError(0, bit_count);

    const auto frames = frame_signal(signal, plan.frame_size());
    const std::size_t k = params.coefficient_count();

    std::vector<std::size_t> eligible;
    std::vector<double> energy(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        energy[i] = frame_energy(frames[i]);
        if (frame_s_max(frames[i], k, plan) > params.ws)
            eligible.push_back(i);
    }
    if (eligible.size() < bit_count)
        throw CapacityError(eligible.size(), bit_count);

    std::stable_sort(eligible.begin(), eligible.end(),
                     [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
    eligible.resize(bit_count);
    std::sort(eligible.begin(), eligible.end());
    return eligible;
}

struct EmbeddedFrame {
    std::vector<double> samples;
    double s_max_original = 0.0;
};

inline EmbeddedFrame embed_bit(std::span<const double> frame, std::uint8_t bit, const EmbedParams& params,
                               const TransformPlan& plan) {
    if (bit > 1)
        throw ValidationError("watermark bit must be 0 or 1");
    const std::size_t k = params.coefficient_count();
    Coefficients coeffs = plan.forward(frame);
    const Eigen::MatrixXd block = detail::leading_block(coeffs, k);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sigma = svd.singularValues();
    const double s_max = sigma(0);
    if (!(s_max > params.ws))
        throw ValidationError("frame is ineligible: largest singular value " + std::to_string(s_max) +
                              " does not exceed watermark strength " + std::to_string(params.ws));

    sigma(0) = bit == 1 ? s_max + params.ws : s_max - params.ws;
    const Eigen::MatrixXd marked = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();

    const Eigen::Index cols = marked.cols();
    for (Eigen::Index r = 0; r < marked.rows(); ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            coeffs(r * cols + c) = marked(r, c);

    return {plan.inverse(coeffs), s_max};
}

inline std::uint8_t extract_bit(std::span<const double> frame, double s_max_original, const EmbedParams& params,
                                const TransformPlan& plan) {
    return frame_s_max(frame, params.coefficient_count(), plan) > s_max_original ? 1 : 0;
}

inline WatermarkedResult embed(const AudioSignal& host, const WatermarkImage& watermark, const EmbedParams& params,
                               const TransformPlan& plan) {
    require_valid(host);
    watermark.validate();
    const auto selected = select_frames(host, params, watermark.size(), plan);
    const std::size_t n = plan.frame_size();

    WatermarkedResult result{host, {}};
    result.key.sample_rate = host.sample_rate;
    result.key.params = params;
    result.key.watermark_width = watermark.width;
    result.key.watermark_height = watermark.height;
    result.key.records.reserve(selected.size());

    for (std::size_t bit = 0; bit < selected.size(); ++bit) {
        const std::size_t index = selected[bit];
        const auto frame = host.view().subspan(index * n, n);
        EmbeddedFrame marked = embed_bit(frame, watermark.bits[bit], params, plan);
        clamp_unit(marked.samples);
        std::copy(marked.samples.begin(), marked.samples.end(),
                  result.signal.samples.begin() + static_cast<std::ptrdiff_t>(index * n));
        result.key.records.push_back({index, marked.s_max_original});
    }
    return result;
}

inline WatermarkedResult embed(const AudioSignal& host, const WatermarkImage& watermark,
                               const EmbedParams& params = {}) {
    params.validate();
    return embed(host, watermark, params, TransformPlan(params.graph));
}

inline WatermarkImage extract(const AudioSignal& signal, const EmbeddingKey& key, const TransformPlan& plan) {
    key.validate();
    if (plan.config() != key.params.graph)
        throw KeyError("transform plan does not match key parameters");
    if (signal.sample_rate != key.sample_rate)
        throw KeyError("signal sample rate " + std::to_string(signal.sample_rate) + " Hz differs from key " +
                       std::to_string(key.sample_rate) + " Hz");

    const std::size_t n = plan.frame_size();
    const std::size_t needed = (key.records.back().frame_index + 1) * n;
    std::vector<double> padded;
    std::span<const double> samples = signal.view();
    if (samples.size() < needed) {
        padded.assign(samples.begin(), samples.end());
        padded.resize(needed, 0.0);
        samples = padded;
    }

    WatermarkImage image;
    image.width = key.watermark_width;
    image.height = key.watermark_height;
    image.bits.resize(key.records.size());
    for (std::size_t i = 0; i < key.records.size(); ++i) {
        const FrameRecord& rec = key.records[i];
        image.bits[i] = extract_bit(samples.subspan(rec.frame_index * n, n), rec.s_max_original, key.params, plan);
    }
    return image;
}

inline WatermarkImage extract(const AudioSignal& signal, const EmbeddingKey& key) {
    key.validate();
    return extract(signal, key, TransformPlan(key.params.graph));
}

} // namespace gbtmark
