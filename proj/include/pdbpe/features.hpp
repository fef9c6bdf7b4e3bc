#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe {

struct FeatureDescriptor {
    std::string channel;
    Variation variation = Variation::Original;
    Symbol symbol = 0;
    /// Decoded base symbols; signed differences for AUTOREGRESSIVE.
    SymbolSeq decoded;
    std::string name;
    /// Training series support of the merge rule; -1 for base symbols.
    std::int64_t support = -1;

    bool is_pattern() const { return support >= 0; }
    bool operator==(const FeatureDescriptor&) const = default;
};

/// Raw columns in canonical order plus the post-processing keep mask.
struct FeatureSchema {
    std::vector<FeatureDescriptor> features;
    Mask keep;

    std::size_t kept_count() const;
    bool operator==(const FeatureSchema&) const = default;
};

struct FeatureMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    Matrix values;

    bool operator==(const FeatureMatrix&) const = default;
};

/// Occurrence counts of `schema_symbols` in `encoded`, divided by encoded length.
/// Empty input gives an all-zero vector.
std::vector<double> count_features(std::span<const Symbol> encoded, std::span<const Symbol> schema_symbols);

/// Population variance per column.
std::vector<double> column_variances(const Matrix& m);

/// Keep mask: columns with variance >= 1e-15. Needs at least two rows.
Mask drop_zero_variance(const Matrix& m);

double pearson(std::span<const double> a, std::span<const double> b);

/// Keep-first pruning: a column is dropped when its |Pearson r| with an
/// already kept column exceeds `threshold`.
Mask prune_correlated(const Matrix& m, double threshold);

Matrix select_columns(const Matrix& m, const Mask& keep);
FeatureMatrix select_columns(const FeatureMatrix& m, const Mask& keep);

/// Group id -> mean feature vector.
using CentroidTable = std::map<std::string, std::vector<double>>;

/// Group means; rows of each group are summed in ascending series-id order.
CentroidTable group_centroids(const FeatureMatrix& m, std::span<const std::string> groups);

/// Appends to each row the centroid of its group, taken from `table` when the
/// group is there and from the rows of `m` otherwise. Column names get "@centroid".
FeatureMatrix centroid_augment(const FeatureMatrix& m, std::span<const std::string> groups,
                               const CentroidTable& table = {});

struct RankedFeature {
    std::size_t column = 0;
    double f_value = 0.0;
};

/// One-way ANOVA F per column, sorted by descending F (ties: column order).
/// Zero within-group SS gives +inf when groups differ, 0 when they don't.
std::vector<RankedFeature> anova_f_rank(const Matrix& m, std::span<const std::string> labels);

}  // namespace pdbpe
