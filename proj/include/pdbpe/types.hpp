#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

namespace pdbpe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data, schema violations, inconsistent artifacts.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numeric breakdown (non positive-definite covariance, singular systems).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

using Symbol = std::int32_t;
using SymbolSeq = std::vector<Symbol>;
using Mask = std::vector<std::uint8_t>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const;
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Variation { Original, Rcs, Rcsm, Autoregressive };
enum class MultivariateMode { PerChannel, WhitenCollapse };

inline constexpr Variation kAllVariations[] = {Variation::Original, Variation::Rcs, Variation::Rcsm,
                                               Variation::Autoregressive};

/// Upper-case names used in config files ("ORIGINAL", "RCS", ...).
std::string_view variation_name(Variation v);
/// Short lower-case tags used inside feature names ("orig", "rcs", "rcsm", "ar").
std::string_view variation_tag(Variation v);
Variation parse_variation(std::string_view text);

std::string_view multivariate_mode_name(MultivariateMode m);
MultivariateMode parse_multivariate_mode(std::string_view text);

/// Regression labels are numbers, classification labels are strings.
using Label = std::variant<double, std::string>;

struct TimeSeries {
    std::string id;
    std::vector<std::string> channels;
    Matrix values;  // length x channels
    Mask mask;      // same shape as values, row-major; 1 = observed
    std::optional<std::string> group_id;
    std::optional<Label> label;

    std::size_t length() const { return values.rows(); }
    std::size_t num_channels() const { return values.cols(); }
    bool observed(std::size_t t, std::size_t c) const { return mask[t * values.cols() + c] != 0; }

    std::vector<double> channel_values(std::size_t c) const { return values.column(c); }
    Mask channel_mask(std::size_t c) const;

    /// Timesteps where at least one channel was observed.
    std::size_t observed_timesteps() const;

    /// Checks shape invariants and zero-fills unobserved entries.
    void validate_and_fill();
};

/// Ordered collection of series sharing one channel layout. Insertion order is canonical.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<std::string> channels) : channels_(std::move(channels)) {}

    void add(TimeSeries series);

    const std::vector<std::string>& channels() const { return channels_; }
    const std::vector<TimeSeries>& series() const { return series_; }
    std::size_t size() const { return series_.size(); }
    bool empty() const { return series_.empty(); }
    const TimeSeries& operator[](std::size_t i) const { return series_[i]; }
    TimeSeries& operator[](std::size_t i) { return series_[i]; }

    /// Subset in the order of `indices`.
    Dataset subset(std::span<const std::size_t> indices) const;
    std::vector<std::string> ids() const;

private:
    std::vector<std::string> channels_;
    std::vector<TimeSeries> series_;
    std::unordered_set<std::string> ids_;
};

struct PipelineConfig {
    int K = 10;
    int W = 8;
    double P = 0.20;
    double U = 0.001;
    double correlation_threshold = 0.95;
    double iqr_multiplier = 1.5;
    std::vector<Variation> variations{std::begin(kAllVariations), std::end(kAllVariations)};
    MultivariateMode multivariate_mode = MultivariateMode::PerChannel;
    bool centroid = false;
    /// Cap on merge rules per vocabulary; 0 means no cap.
    std::size_t max_patterns = 0;

    void validate() const;
    bool operator==(const PipelineConfig&) const = default;
};

struct SymbolicSeries {
    std::string series_id;
    Variation variation = Variation::Original;
    SymbolSeq symbols;
};

/// Keeps series with at least `min_observed` observed timesteps (any channel); order preserved.
Dataset ingest_filter(const Dataset& dataset, std::size_t min_observed);

}  // namespace pdbpe
