#pragma once

// Graph-based transform over fixed-length audio frames.
//
// Each frame of N samples is treated as a signal on a banded graph where
// sample i is joined to i±1 with weight w1 and to i±2 with weight w2. The
// transform basis is the eigenbasis of that graph's Laplacian L = D - A,
// ordered by ascending eigenvalue so that low graph frequencies come first.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gbtmark/error.hpp"

namespace gbtmark {

struct GraphConfig {
    std::size_t frame_size = 10;
    double w1 = 1.0;
    double w2 = 0.3;

    void validate() const {
        if (frame_size < 3)
            throw ConfigError("frame_size must be at least 3, got " + std::to_string(frame_size));
        if (!(w1 > 0.0) || !std::isfinite(w1))
            throw ConfigError("w1 must be a positive finite weight");
        if (!(w2 >= 0.0) || !std::isfinite(w2))
            throw ConfigError("w2 must be a non-negative finite weight");
    }

    friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

using Coefficients = Eigen::VectorXd;

inline Eigen::MatrixXd build_adjacency(const GraphConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.frame_size);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i + 1 < n)
            a(i, i + 1) = a(i + 1, i) = config.w1;
        if (i + 2 < n)
            a(i, i + 2) = a(i + 2, i) = config.w2;
    }
    return a;
}

inline Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw ValidationError("adjacency matrix must be square");
    const Eigen::Index n = adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0)
            throw ValidationError("adjacency matrix must have a zero diagonal");
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = adjacency(i, j);
            if (!std::isfinite(a) || a < 0.0)
                throw ValidationError("adjacency weights must be finite and non-negative");
            if (a != adjacency(j, i))
                throw ValidationError("adjacency matrix must be symmetric");
        }
    }
    Eigen::MatrixXd laplacian = -adjacency;
    laplacian.diagonal() = adjacency.rowwise().sum();
    return laplacian;
}

namespace detail {

// Entries closer than this are treated as equal when locating a column's
// dominant entry, so mirrored eigenvectors pick the same row on every run.
inline constexpr double kDominantTieTolerance = 1e-9;
inline constexpr double kEigenvalueTieTolerance = 1e-9;

inline Eigen::Index dominant_row(const Eigen::Ref<const Eigen::VectorXd>& column) {
    const double peak = column.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < column.size(); ++i)
        if (std::abs(column(i)) >= peak - kDominantTieTolerance)
            return i;
    return 0;
}

} // namespace detail

/// Precomputed Laplacian eigenbasis for one graph configuration.
///
/// Immutable once built and safe to share between threads. Column j of
/// basis() is the eigenvector for eigenvalues()[j]; its dominant entry is
/// positive.
class TransformPlan {
public:
    explicit TransformPlan(const GraphConfig& config = {})
        : config_(config), laplacian_(build_laplacian(build_adjacency(config))) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_);
        if (solver.info() != Eigen::Success)
            throw NumericError("Laplacian eigendecomposition did not converge");

        eigenvalues_ = solver.eigenvalues();
        basis_ = solver.eigenvectors();
        const Eigen::Index n = basis_.cols();

        for (Eigen::Index j = 0; j < n; ++j) {
            if (basis_(detail::dominant_row(basis_.col(j)), j) < 0.0)
                basis_.col(j) *= -1.0;
        }

        // Within a cluster of (numerically) repeated eigenvalues, order the
        // columns by the row of their dominant entry.
        Eigen::Index begin = 0;
        while (begin < n) {
            Eigen::Index end = begin + 1;
            while (end < n &&
                   eigenvalues_(end) - eigenvalues_(end - 1) <= detail::kEigenvalueTieTolerance)
                ++end;
            if (end - begin > 1)
                order_cluster(begin, end);
            begin = end;
        }
    }

    const GraphConfig& config() const noexcept { return config_; }
    std::size_t frame_size() const noexcept { return config_.frame_size; }
    const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }

    /// c = V^T s
    Coefficients forward(std::span<const double> frame) const {
        check_length(frame.size(), "frame");
        const Eigen::Map<const Eigen::VectorXd> s(frame.data(), static_cast<Eigen::Index>(frame.size()));
        return basis_.transpose() * s;
    }

    /// s = V c
    std::vector<double> inverse(const Coefficients& coeffs) const {
        check_length(static_cast<std::size_t>(coeffs.size()), "coefficient vector");
        std::vector<double> frame(frame_size());
        Eigen::Map<Eigen::VectorXd>(frame.data(), static_cast<Eigen::Index>(frame.size())) = basis_ * coeffs;
        return frame;
    }

private:
    void check_length(std::size_t got, const char* what) const {
        if (got != frame_size())
            throw ValidationError(std::string(what) + " length " + std::to_string(got) +
                                  " does not match frame size " + std::to_string(frame_size()));
    }

    void order_cluster(Eigen::Index begin, Eigen::Index end) {
        std::vector<Eigen::Index> cols(static_cast<std::size_t>(end - begin));
        std::iota(cols.begin(), cols.end(), begin);
        std::stable_sort(cols.begin(), cols.end(), [this](Eigen::Index a, Eigen::Index b) {
            return detail::dominant_row(basis_.col(a)) < detail::dominant_row(basis_.col(b));
        });
        const Eigen::MatrixXd block = basis_.middleCols(begin, end - begin);
        for (std::size_t k = 0; k < cols.size(); ++k)
            basis_.col(begin + static_cast<Eigen::Index>(k)) = block.col(cols[k] - begin);
    }

    GraphConfig config_;
    Eigen::MatrixXd laplacian_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd basis_;
};

inline TransformPlan make_plan(const GraphConfig& config) { return TransformPlan(config); }

} // namespace gbtmark
