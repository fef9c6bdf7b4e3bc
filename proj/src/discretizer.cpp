#include "pdbpe/discretizer.hpp"

#include <algorithm>
#include <cmath>

namespace pdbpe {

Symbol Discretizer::apply(double value) const {
    const double width = bin_width();
    const double pos = std::floor((value - edges.front()) / width);
    if (!(pos > 0.0)) return 0;  // also catches NaN
    if (pos >= static_cast<double>(K - 1)) return K - 1;
    return static_cast<Symbol>(pos);
}

SymbolSeq Discretizer::apply(std::span<const double> values) const {
    SymbolSeq out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = apply(values[i]);
    return out;
}

double linear_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of an empty sample");
    const double pos = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Discretizer fit_discretizer(std::span<const double> training_values, int K, double iqr_multiplier) {
    if (K < 2) throw ConfigError("discretizer needs K >= 2");
    std::vector<double> sorted(training_values.begin(), training_values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) throw DataError("discretizer: no training values");

    const double q1 = linear_quantile(sorted, 0.25);
    const double q3 = linear_quantile(sorted, 0.75);
    const double iqr = q3 - q1;

    Discretizer d;
    d.K = K;
    d.lower_fence = q1 - iqr_multiplier * iqr;
    d.upper_fence = q3 + iqr_multiplier * iqr;

    const auto first = std::lower_bound(sorted.begin(), sorted.end(), d.lower_fence);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), d.upper_fence);
    if (first == last || *first == *(last - 1))
        throw DataError("discretizer: fewer than 2 distinct values inside the IQR fences");
    const double lo = *first;
    const double hi = *(last - 1);

    d.edges.resize(static_cast<std::size_t>(K) + 1);
    for (int i = 0; i < K; ++i) d.edges[i] = lo + (hi - lo) * static_cast<double>(i) / K;
    d.edges[K] = hi;
    return d;
}

}  // namespace pdbpe
