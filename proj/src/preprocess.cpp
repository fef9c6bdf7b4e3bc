#include "pdbpe/preprocess.hpp"

#include <cmath>
#include <sstream>

namespace pdbpe {

namespace {

constexpr double kConstantStd = 1e-12;
constexpr double kRidgeEpsilon = 1e-8;
// Pivot below this fraction of the largest diagonal entry counts as singular.
constexpr double kSingularPivot = 1e-12;

bool try_cholesky(const Matrix& cov, Matrix& lower) {
    const std::size_t d = cov.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, cov(i, i));
    if (!(max_diag > 0.0)) return false;

    lower = Matrix(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double pivot = cov(j, j);
        for (std::size_t k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
        if (!(pivot > kSingularPivot * max_diag)) return false;
        const double ljj = std::sqrt(pivot);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = cov(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

}  // namespace

std::vector<double> zscore_normalize(std::span<const double> values, std::span<const std::uint8_t> mask) {
    if (values.size() != mask.size()) throw DataError("zscore_normalize: values and mask differ in length");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i]) {
            sum += values[i];
            ++n;
        }
    }
    if (n == 0) throw DataError("zscore_normalize: no observed entries");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i]) ss += (values[i] - mean) * (values[i] - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));

    std::vector<double> out(values.size(), 0.0);
    if (sd < kConstantStd) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i]) out[i] = (values[i] - mean) / sd;
    }
    return out;
}

WhiteningStats fit_whitening(const Matrix& values, std::span<const std::uint8_t> mask) {
    const std::size_t d = values.cols();
    if (d == 0) throw DataError("fit_whitening: no channels");
    if (mask.size() != values.rows() * d) throw DataError("fit_whitening: mask shape differs from values");

    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < values.rows(); ++t) {
        bool complete = true;
        for (std::size_t c = 0; c < d; ++c) complete = complete && mask[t * d + c];
        if (complete) rows.push_back(t);
    }
    if (rows.empty()) throw DataError("fit_whitening: no fully observed rows");

    WhiteningStats stats;
    stats.mean.assign(d, 0.0);
    for (std::size_t t : rows)
        for (std::size_t c = 0; c < d; ++c) stats.mean[c] += values(t, c);
    for (double& m : stats.mean) m /= static_cast<double>(rows.size());

    Matrix cov(d, d);
    for (std::size_t t : rows) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = values(t, i) - stats.mean[i];
            for (std::size_t j = 0; j <= i; ++j) cov(i, j) += di * (values(t, j) - stats.mean[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cov(i, j) /= static_cast<double>(rows.size());
            cov(j, i) = cov(i, j);
        }
    }

    if (try_cholesky(cov, stats.cholesky_factor)) return stats;

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += cov(i, i);
    Matrix loaded = cov;
    for (std::size_t i = 0; i < d; ++i) loaded(i, i) += kRidgeEpsilon * trace / static_cast<double>(d);
    if (try_cholesky(loaded, stats.cholesky_factor)) return stats;

    std::ostringstream msg;
    msg << "covariance is not positive definite after regularization (d=" << d << ", trace=" << trace
        << ", complete rows=" << rows.size() << ")";
    throw NumericError(msg.str());
}

Matrix whiten_multivariate(const Matrix& values, const WhiteningStats& stats) {
    const std::size_t d = stats.dims();
    if (values.cols() != d) throw DataError("whiten_multivariate: dimension mismatch");
    Matrix out(values.rows(), d);
    const Matrix& L = stats.cholesky_factor;
    for (std::size_t t = 0; t < values.rows(); ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            double s = values(t, i) - stats.mean[i];
            for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * out(t, k);
            out(t, i) = s / L(i, i);
        }
    }
    return out;
}

std::vector<double> l2_collapse(const Matrix& whitened) {
    std::vector<double> out(whitened.rows());
    for (std::size_t t = 0; t < whitened.rows(); ++t) {
        double s = 0.0;
        for (double v : whitened.row(t)) s += v * v;
        out[t] = std::sqrt(s);
    }
    return out;
}

std::vector<double> paa(std::span<const double> values, int window) {
    if (window < 1) throw ConfigError("PAA window must be >= 1");
    if (values.empty()) throw DataError("PAA of an empty sequence");
    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t segments = (values.size() + w - 1) / w;
    std::vector<double> out(segments);
    for (std::size_t i = 0; i < segments; ++i) {
        const std::size_t begin = i * w;
        const std::size_t end = std::min(begin + w, values.size());
        double s = 0.0;
        for (std::size_t j = begin; j < end; ++j) s += values[j];
        out[i] = s / static_cast<double>(end - begin);
    }
    return out;
}

std::vector<std::vector<double>> preprocess_series(const TimeSeries& series, MultivariateMode mode, int window) {
    std::vector<std::vector<double>> streams;
    if (mode == MultivariateMode::PerChannel) {
        for (std::size_t c = 0; c < series.num_channels(); ++c) {
            const auto values = series.channel_values(c);
            const auto mask = series.channel_mask(c);
            std::size_t observed = 0;
            for (auto m : mask) observed += m;
            // A channel with nothing observed normalizes to the all-zero stream.
            std::vector<double> normalized =
                observed == 0 ? std::vector<double>(values.size(), 0.0) : zscore_normalize(values, mask);
            streams.push_back(paa(normalized, window));
        }
        return streams;
    }

    const std::size_t d = series.num_channels();
    const WhiteningStats stats = fit_whitening(series.values, series.mask);
    // Missing entries take the channel mean, i.e. zero after centering.
    Matrix filled = series.values;
    for (std::size_t t = 0; t < series.length(); ++t)
        for (std::size_t c = 0; c < d; ++c)
            if (!series.observed(t, c)) filled(t, c) = stats.mean[c];
    Matrix whitened = whiten_multivariate(filled, stats);
    for (std::size_t t = 0; t < series.length(); ++t) {
        bool any = false;
        for (std::size_t c = 0; c < d; ++c) any = any || series.observed(t, c);
        if (!any)
            for (std::size_t c = 0; c < d; ++c) whitened(t, c) = 0.0;
    }
    streams.push_back(paa(l2_collapse(whitened), window));
    return streams;
}

}  // namespace pdbpe
