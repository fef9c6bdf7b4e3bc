#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdbpe/bpe.hpp"
#include "pdbpe/discretizer.hpp"
#include "pdbpe/features.hpp"
#include "pdbpe/types.hpp"
#include "pdbpe/variations.hpp"

namespace pdbpe {

struct VariationModel {
    Variation variation = Variation::Original;
    Vocabulary vocab;
    /// Feature symbols: the whole base alphabet, then support-filtered patterns.
    std::vector<Symbol> emitted;

    bool operator==(const VariationModel&) const = default;
};

/// Fitted state of one stream: an input channel, or the collapsed multivariate stream.
struct ChannelModel {
    std::string name;
    Discretizer discretizer;
    RcsmMedians medians;
    std::vector<VariationModel> variations;

    bool operator==(const ChannelModel&) const = default;
};

/// Inclusive span in original timestep coordinates.
struct OccurrenceSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const OccurrenceSpan&) const = default;
};

/// Everything needed to turn raw series into the fitted feature space.
struct FittedModel {
    PipelineConfig config;
    std::vector<std::string> input_channels;
    std::vector<ChannelModel> channels;
    FeatureSchema schema;
    std::optional<CentroidTable> centroids;

    /// One column per schema feature, before masking.
    FeatureMatrix transform_raw(const Dataset& data) const;
    /// Masked columns, plus centroid block when the config asks for it.
    FeatureMatrix transform(const Dataset& data) const;
    std::vector<std::string> output_columns() const;

    /// Where the tokens of raw feature `feature` occur in `series`, mapped back to original timesteps.
    std::vector<OccurrenceSpan> occurrence_spans(const TimeSeries& series, std::size_t feature) const;

    /// Discretized (PAA-level) symbols of each stream of a series.
    std::vector<SymbolSeq> symbolize(const TimeSeries& series) const;

    bool operator==(const FittedModel&) const = default;

private:
    void check_channels(const Dataset& data) const;
};

/// Per-(stream, variation) bookkeeping from a fit.
struct VocabularyReport {
    std::string channel;
    Variation variation = Variation::Original;
    std::size_t series = 0;
    std::int64_t pair_slots = 0;
    double threshold = 0.0;
    std::size_t merges = 0;
    std::size_t emitted_patterns = 0;
    std::size_t features = 0;  // base alphabet + emitted patterns
};

struct PipelineFit {
    FittedModel model;
    FeatureMatrix features;
    std::vector<VocabularyReport> report;
};

/// Learns the full pipeline on `train` and returns the fitted model with the training matrix.
PipelineFit fit_pipeline(const Dataset& train, const PipelineConfig& config);

/// Group ids in dataset order; throws DataError when a series lacks one.
std::vector<std::string> group_ids(const Dataset& data);

/// Human-readable feature name, e.g. "hr.rcs.P17" or "hr.ar.S-2".
std::string feature_name(const std::string& channel, Variation v, Symbol symbol, const Vocabulary& vocab, int K);

}  // namespace pdbpe
