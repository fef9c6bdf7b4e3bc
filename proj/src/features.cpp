#include "pdbpe/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdbpe {

std::size_t FeatureSchema::kept_count() const {
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

std::vector<double> count_features(std::span<const Symbol> encoded, std::span<const Symbol> schema_symbols) {
    std::vector<double> out(schema_symbols.size(), 0.0);
    if (encoded.empty() || schema_symbols.empty()) return out;

    const Symbol max_symbol = *std::max_element(schema_symbols.begin(), schema_symbols.end());
    std::vector<std::int64_t> slot(static_cast<std::size_t>(max_symbol) + 1, -1);
    for (std::size_t j = 0; j < schema_symbols.size(); ++j) slot[static_cast<std::size_t>(schema_symbols[j])] = j;

    std::vector<std::int64_t> counts(schema_symbols.size(), 0);
    for (Symbol s : encoded) {
        if (s >= 0 && s <= max_symbol) {
            const auto j = slot[static_cast<std::size_t>(s)];
            if (j >= 0) ++counts[static_cast<std::size_t>(j)];
        }
    }
    const double len = static_cast<double>(encoded.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<double>(counts[j]) / len;
    return out;
}

std::vector<double> column_variances(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    if (m.rows() == 0) return out;
    const double n = static_cast<double>(m.rows());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
        mean /= n;
        double ss = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) ss += (m(r, c) - mean) * (m(r, c) - mean);
        out[c] = ss / n;
    }
    return out;
}

Mask drop_zero_variance(const Matrix& m) {
    if (m.rows() < 2) throw DataError("drop_zero_variance needs at least two rows");
    const auto var = column_variances(m);
    Mask keep(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) keep[c] = var[c] >= 1e-15 ? 1 : 0;
    return keep;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n != b.size() || n == 0) throw DataError("pearson: length mismatch");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

Mask prune_correlated(const Matrix& m, double threshold) {
    Mask keep(m.cols(), 0);
    std::vector<std::vector<double>> kept_columns;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto col = m.column(c);
        bool redundant = false;
        for (const auto& k : kept_columns) {
            if (std::abs(pearson(col, k)) > threshold) {
                redundant = true;
                break;
            }
        }
        if (!redundant) {
            keep[c] = 1;
            kept_columns.push_back(col);
        }
    }
    return keep;
}

Matrix select_columns(const Matrix& m, const Mask& keep) {
    if (keep.size() != m.cols()) throw DataError("column mask width differs from matrix");
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < keep.size(); ++c)
        if (keep[c]) cols.push_back(c);
    Matrix out(m.rows(), cols.size());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = m(r, cols[j]);
    return out;
}

FeatureMatrix select_columns(const FeatureMatrix& m, const Mask& keep) {
    FeatureMatrix out;
    out.row_ids = m.row_ids;
    out.values = select_columns(m.values, keep);
    for (std::size_t c = 0; c < keep.size(); ++c)
        if (keep[c]) out.column_names.push_back(m.column_names[c]);
    return out;
}

CentroidTable group_centroids(const FeatureMatrix& m, std::span<const std::string> groups) {
    if (groups.size() != m.values.rows()) throw DataError("group ids do not match matrix rows");
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return groups[a] != groups[b] ? groups[a] < groups[b] : m.row_ids[a] < m.row_ids[b];
    });

    CentroidTable table;
    std::size_t i = 0;
    while (i < order.size()) {
        const std::string& g = groups[order[i]];
        if (g.empty()) throw DataError("series '" + m.row_ids[order[i]] + "' has no group id");
        std::vector<double> sum(m.values.cols(), 0.0);
        std::size_t n = 0;
        for (; i < order.size() && groups[order[i]] == g; ++i, ++n) {
            const auto row = m.values.row(order[i]);
            for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += row[c];
        }
        for (double& v : sum) v /= static_cast<double>(n);
        table.emplace(g, std::move(sum));
    }
    return table;
}

FeatureMatrix centroid_augment(const FeatureMatrix& m, std::span<const std::string> groups,
                               const CentroidTable& table) {
    const CentroidTable local = group_centroids(m, groups);
    const std::size_t f = m.values.cols();
    FeatureMatrix out;
    out.row_ids = m.row_ids;
    out.column_names = m.column_names;
    for (const auto& name : m.column_names) out.column_names.push_back(name + "@centroid");
    out.values = Matrix(m.values.rows(), 2 * f);
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        const auto known = table.find(groups[r]);
        const std::vector<double>& centroid = known != table.end() ? known->second : local.at(groups[r]);
        if (centroid.size() != f) throw DataError("centroid width differs from feature width");
        for (std::size_t c = 0; c < f; ++c) {
            out.values(r, c) = m.values(r, c);
            out.values(r, f + c) = centroid[c];
        }
    }
    return out;
}

std::vector<RankedFeature> anova_f_rank(const Matrix& m, std::span<const std::string> labels) {
    if (labels.size() != m.rows()) throw DataError("labels do not match matrix rows");
    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t r = 0; r < labels.size(); ++r) classes[labels[r]].push_back(r);
    if (classes.size() < 2) throw DataError("ANOVA ranking needs at least two classes");
    for (const auto& [label, rows] : classes) {
        if (rows.size() < 2) throw DataError("ANOVA ranking needs at least two rows in class '" + label + "'");
    }
    const double n = static_cast<double>(m.rows());
    const double k = static_cast<double>(classes.size());

    std::vector<RankedFeature> ranked;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double grand = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) grand += m(r, c);
        grand /= n;
        double between = 0.0, within = 0.0;
        for (const auto& [label, rows] : classes) {
            double mean = 0.0;
            for (std::size_t r : rows) mean += m(r, c);
            mean /= static_cast<double>(rows.size());
            between += static_cast<double>(rows.size()) * (mean - grand) * (mean - grand);
            for (std::size_t r : rows) within += (m(r, c) - mean) * (m(r, c) - mean);
        }
        double f = 0.0;
        if (within == 0.0)
            f = between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        else
            f = (between / (k - 1.0)) / (within / (n - k));
        ranked.push_back({c, f});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedFeature& a, const RankedFeature& b) { return a.f_value > b.f_value; });
    return ranked;
}

}  // namespace pdbpe
