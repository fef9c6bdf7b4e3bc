#include "pdbpe/types.hpp"

#include <algorithm>
#include <cmath>

namespace pdbpe {

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

std::string_view variation_name(Variation v) {
    switch (v) {
        case Variation::Original: return "ORIGINAL";
        case Variation::Rcs: return "RCS";
        case Variation::Rcsm: return "RCSM";
        case Variation::Autoregressive: return "AUTOREGRESSIVE";
    }
    return "?";
}

std::string_view variation_tag(Variation v) {
    switch (v) {
        case Variation::Original: return "orig";
        case Variation::Rcs: return "rcs";
        case Variation::Rcsm: return "rcsm";
        case Variation::Autoregressive: return "ar";
    }
    return "?";
}

Variation parse_variation(std::string_view text) {
    for (Variation v : kAllVariations) {
        if (text == variation_name(v) || text == variation_tag(v)) return v;
    }
    throw ConfigError("unknown variation '" + std::string(text) + "'");
}

std::string_view multivariate_mode_name(MultivariateMode m) {
    return m == MultivariateMode::PerChannel ? "PER_CHANNEL" : "WHITEN_COLLAPSE";
}

MultivariateMode parse_multivariate_mode(std::string_view text) {
    if (text == "PER_CHANNEL") return MultivariateMode::PerChannel;
    if (text == "WHITEN_COLLAPSE") return MultivariateMode::WhitenCollapse;
    throw ConfigError("unknown multivariate_mode '" + std::string(text) + "'");
}

Mask TimeSeries::channel_mask(std::size_t c) const {
    Mask out(length());
    for (std::size_t t = 0; t < length(); ++t) out[t] = mask[t * num_channels() + c];
    return out;
}

std::size_t TimeSeries::observed_timesteps() const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < length(); ++t) {
        for (std::size_t c = 0; c < num_channels(); ++c) {
            if (observed(t, c)) {
                ++n;
                break;
            }
        }
    }
    return n;
}

void TimeSeries::validate_and_fill() {
    if (values.rows() < 1 || values.cols() < 1)
        throw DataError("series '" + id + "' must have length >= 1 and at least one channel");
    if (channels.size() != values.cols())
        throw DataError("series '" + id + "': channel names do not match value columns");
    if (mask.size() != values.rows() * values.cols())
        throw DataError("series '" + id + "': mask shape differs from values");
    for (std::size_t t = 0; t < length(); ++t) {
        for (std::size_t c = 0; c < num_channels(); ++c) {
            if (!observed(t, c)) {
                values(t, c) = 0.0;
            } else if (!std::isfinite(values(t, c))) {
                throw DataError("series '" + id + "': non-finite value at t=" + std::to_string(t));
            }
        }
    }
}

void Dataset::add(TimeSeries series) {
    if (series_.empty() && channels_.empty()) channels_ = series.channels;
    if (series.channels != channels_)
        throw DataError("series '" + series.id + "' has a channel layout different from the dataset");
    if (ids_.contains(series.id)) throw DataError("duplicate series id '" + series.id + "'");
    series.validate_and_fill();
    ids_.insert(series.id);
    series_.push_back(std::move(series));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out(channels_);
    out.series_.reserve(indices.size());
    for (std::size_t i : indices) out.add(series_.at(i));
    return out;
}

std::vector<std::string> Dataset::ids() const {
    std::vector<std::string> out;
    out.reserve(series_.size());
    for (const auto& s : series_) out.push_back(s.id);
    return out;
}

void PipelineConfig::validate() const {
    if (K < 2 || K > 100) throw ConfigError("K must be in [2, 100], got " + std::to_string(K));
    if (W < 1 || W > 15) throw ConfigError("W must be in [1, 15], got " + std::to_string(W));
    if (!(P > 0.0 && P < 1.0)) throw ConfigError("P must be in (0, 1)");
    if (!(U > 0.0 && U < 1.0)) throw ConfigError("U must be in (0, 1)");
    if (!(correlation_threshold > 0.0 && correlation_threshold <= 1.0))
        throw ConfigError("correlation_threshold must be in (0, 1]");
    if (!(iqr_multiplier >= 0.0)) throw ConfigError("iqr_multiplier must be >= 0");
    if (variations.empty()) throw ConfigError("at least one variation is required");
    std::vector<Variation> sorted = variations;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("variations must not repeat");
}

Dataset ingest_filter(const Dataset& dataset, std::size_t min_observed) {
    Dataset out(dataset.channels());
    for (const auto& s : dataset.series()) {
        if (s.observed_timesteps() >= min_observed) out.add(s);
    }
    return out;
}

}  // namespace pdbpe
