#pragma once

#include <span>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe {

/// Standardizes the observed entries to zero mean and unit population std.
/// Unobserved entries come back as 0. Constant input (std < 1e-12) yields all zeros.
std::vector<double> zscore_normalize(std::span<const double> values, std::span<const std::uint8_t> mask);

/// Mean and lower Cholesky factor L of the covariance (L * L^T = C).
struct WhiteningStats {
    std::vector<double> mean;
    Matrix cholesky_factor;

    std::size_t dims() const { return mean.size(); }
};

/// Estimates mean and population covariance from fully observed rows of `values`.
///
/// The plain covariance is factored first. When it is numerically singular the
/// diagonal is loaded with 1e-8 * trace(C) / d and factored again; failing that,
/// a NumericError is thrown.
WhiteningStats fit_whitening(const Matrix& values, std::span<const std::uint8_t> mask);

/// Solves L * out_r = (x_r - mean) for every row by forward substitution.
Matrix whiten_multivariate(const Matrix& values, const WhiteningStats& stats);

/// Row-wise Euclidean norm.
std::vector<double> l2_collapse(const Matrix& whitened);

/// Piecewise aggregate approximation; a trailing partial window is averaged over its own size.
std::vector<double> paa(std::span<const double> values, int window);

/// Normalized, PAA-reduced streams for one series: one per channel in PER_CHANNEL
/// mode, a single collapsed stream in WHITEN_COLLAPSE mode.
std::vector<std::vector<double>> preprocess_series(const TimeSeries& series, MultivariateMode mode, int window);

}  // namespace pdbpe
