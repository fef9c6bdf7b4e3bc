#pragma once

#include <span>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe {

/// Dataset-level equal-width binning with IQR outlier fences.
struct Discretizer {
    int K = 0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;
    std::vector<double> edges;  // K + 1 ascending values

    double bin_width() const { return (edges.back() - edges.front()) / K; }

    /// Total: values outside [edges[0], edges[K]] clamp into the extreme bins.
    Symbol apply(double value) const;
    SymbolSeq apply(std::span<const double> values) const;

    bool operator==(const Discretizer&) const = default;
};

/// Quantile of sorted data by linear interpolation at position (n - 1) * q.
double linear_quantile(std::span<const double> sorted, double q);

Discretizer fit_discretizer(std::span<const double> training_values, int K, double iqr_multiplier);

}  // namespace pdbpe
