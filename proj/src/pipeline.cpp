#include "pdbpe/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "pdbpe/parallel.hpp"
#include "pdbpe/preprocess.hpp"

namespace pdbpe {

namespace {

std::vector<std::string> stream_names(const std::vector<std::string>& channels, MultivariateMode mode) {
    if (mode == MultivariateMode::PerChannel) return channels;
    std::string joined;
    for (const auto& c : channels) joined += (joined.empty() ? "" : "+") + c;
    return {joined};
}

SymbolSeq display_symbols(const SymbolSeq& decoded, Variation v, int K) {
    if (v != Variation::Autoregressive) return decoded;
    SymbolSeq out = decoded;
    for (Symbol& s : out) s = ar_from_offset(s, K);
    return out;
}

}  // namespace

std::string feature_name(const std::string& channel, Variation v, Symbol symbol, const Vocabulary& vocab, int K) {
    std::string token;
    if (vocab.is_pattern(symbol))
        token = "P" + std::to_string(symbol);
    else
        token = "S" + std::to_string(v == Variation::Autoregressive ? ar_from_offset(symbol, K) : symbol);
    return channel + "." + std::string(variation_tag(v)) + "." + token;
}

std::vector<std::string> group_ids(const Dataset& data) {
    std::vector<std::string> out;
    out.reserve(data.size());
    for (const auto& s : data.series()) {
        if (!s.group_id || s.group_id->empty()) throw DataError("series '" + s.id + "' has no group id");
        out.push_back(*s.group_id);
    }
    return out;
}

void FittedModel::check_channels(const Dataset& data) const {
    for (const auto& c : data.channels()) {
        if (std::find(input_channels.begin(), input_channels.end(), c) == input_channels.end())
            throw DataError("unknown channel '" + c + "' (model was fitted on other channels)");
    }
    for (const auto& c : input_channels) {
        if (std::find(data.channels().begin(), data.channels().end(), c) == data.channels().end())
            throw DataError("missing channel '" + c + "' required by the model");
    }
    if (data.channels() != input_channels) throw DataError("channel order differs from the fitted model");
}

std::vector<SymbolSeq> FittedModel::symbolize(const TimeSeries& series) const {
    const auto streams = preprocess_series(series, config.multivariate_mode, config.W);
    std::vector<SymbolSeq> out;
    out.reserve(streams.size());
    for (std::size_t c = 0; c < streams.size(); ++c) out.push_back(channels[c].discretizer.apply(streams[c]));
    return out;
}

FeatureMatrix FittedModel::transform_raw(const Dataset& data) const {
    check_channels(data);
    FeatureMatrix out;
    out.row_ids = data.ids();
    for (const auto& f : schema.features) out.column_names.push_back(f.name);
    out.values = Matrix(data.size(), schema.features.size());

    parallel_for(data.size(), [&](std::size_t i) {
        const auto symbols = symbolize(data[i]);
        auto row = out.values.row(i);
        std::size_t col = 0;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            const ChannelModel& ch = channels[c];
            for (const VariationModel& vm : ch.variations) {
                const SymbolSeq base = make_variation(symbols[c], vm.variation, config.K, ch.medians);
                const SymbolSeq encoded = vm.vocab.encode(base);
                const auto counts = count_features(encoded, vm.emitted);
                std::copy(counts.begin(), counts.end(), row.begin() + static_cast<std::ptrdiff_t>(col));
                col += counts.size();
            }
        }
    });
    return out;
}

FeatureMatrix FittedModel::transform(const Dataset& data) const {
    FeatureMatrix masked = select_columns(transform_raw(data), schema.keep);
    if (!config.centroid) return masked;
    return centroid_augment(masked, group_ids(data), centroids.value_or(CentroidTable{}));
}

std::vector<std::string> FittedModel::output_columns() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < schema.features.size(); ++i)
        if (schema.keep[i]) names.push_back(schema.features[i].name);
    if (config.centroid) {
        const std::size_t n = names.size();
        for (std::size_t i = 0; i < n; ++i) names.push_back(names[i] + "@centroid");
    }
    return names;
}

std::vector<OccurrenceSpan> FittedModel::occurrence_spans(const TimeSeries& series, std::size_t feature) const {
    const FeatureDescriptor& fd = schema.features.at(feature);
    const auto ch_it = std::find_if(channels.begin(), channels.end(),
                                    [&](const ChannelModel& c) { return c.name == fd.channel; });
    if (ch_it == channels.end()) throw DataError("feature refers to unknown stream '" + fd.channel + "'");
    const auto vm_it = std::find_if(ch_it->variations.begin(), ch_it->variations.end(),
                                    [&](const VariationModel& v) { return v.variation == fd.variation; });
    if (vm_it == ch_it->variations.end()) throw DataError("feature refers to a variation that was not fitted");
    if (series.channels != input_channels) throw DataError("series '" + series.id + "' has a different channel layout");

    const std::size_t c = static_cast<std::size_t>(ch_it - channels.begin());
    const auto symbols = symbolize(series);
    std::vector<SourceRange> trace;
    const SymbolSeq base = make_variation_traced(symbols[c], vm_it->variation, config.K, ch_it->medians, trace);
    const SymbolSeq encoded = vm_it->vocab.encode(base);

    const std::size_t w = static_cast<std::size_t>(config.W);
    std::vector<OccurrenceSpan> spans;
    std::size_t pos = 0;
    for (Symbol tok : encoded) {
        const std::size_t len = vm_it->vocab.decode(tok).size();
        if (tok == fd.symbol) {
            const std::size_t first = trace[pos].first;
            const std::size_t last = trace[pos + len - 1].last;
            spans.push_back({first * w, std::min((last + 1) * w, series.length()) - 1});
        }
        pos += len;
    }
    return spans;
}

PipelineFit fit_pipeline(const Dataset& train, const PipelineConfig& config) {
    config.validate();
    if (train.empty()) throw DataError("cannot fit on an empty dataset");

    PipelineFit result;
    FittedModel& model = result.model;
    model.config = config;
    model.input_channels = train.channels();
    const auto names = stream_names(train.channels(), config.multivariate_mode);

    std::vector<std::vector<std::vector<double>>> streams(train.size());
    parallel_for(train.size(),
                 [&](std::size_t i) { streams[i] = preprocess_series(train[i], config.multivariate_mode, config.W); });

    const double support_floor = static_cast<double>(train.size()) * config.P;
    for (std::size_t c = 0; c < names.size(); ++c) {
        ChannelModel ch;
        ch.name = names[c];

        std::vector<double> pooled;
        for (const auto& s : streams) pooled.insert(pooled.end(), s[c].begin(), s[c].end());
        ch.discretizer = fit_discretizer(pooled, config.K, config.iqr_multiplier);

        std::vector<SymbolSeq> symbols(train.size());
        parallel_for(train.size(), [&](std::size_t i) { symbols[i] = ch.discretizer.apply(streams[i][c]); });
        ch.medians = fit_rcsm_medians(symbols);

        for (Variation v : config.variations) {
            const int base = base_alphabet_size(v, config.K);
            std::vector<SymbolSeq> corpus(train.size());
            parallel_for(train.size(),
                         [&](std::size_t i) { corpus[i] = make_variation(symbols[i], v, config.K, ch.medians); });
            BpeFit fit = fit_bpe(std::move(corpus), base, {config.P, config.U, config.max_patterns});

            VariationModel vm{v, std::move(fit.vocab), {}};
            vm.emitted.resize(static_cast<std::size_t>(base));
            std::iota(vm.emitted.begin(), vm.emitted.end(), 0);
            for (const MergeRule& r : vm.vocab.rules()) {
                if (static_cast<double>(r.train_series_support) >= support_floor) vm.emitted.push_back(r.new_symbol);
            }

            for (Symbol s : vm.emitted) {
                FeatureDescriptor fd;
                fd.channel = ch.name;
                fd.variation = v;
                fd.symbol = s;
                fd.decoded = display_symbols(vm.vocab.decode(s), v, config.K);
                fd.name = feature_name(ch.name, v, s, vm.vocab, config.K);
                fd.support = vm.vocab.is_pattern(s) ? vm.vocab.rule_for(s).train_series_support : -1;
                model.schema.features.push_back(std::move(fd));
            }

            VocabularyReport rep;
            rep.channel = ch.name;
            rep.variation = v;
            rep.series = train.size();
            rep.pair_slots = fit.pair_slots;
            rep.threshold = fit.threshold;
            rep.merges = vm.vocab.rules().size();
            rep.emitted_patterns = vm.emitted.size() - static_cast<std::size_t>(base);
            rep.features = vm.emitted.size();
            result.report.push_back(rep);

            ch.variations.push_back(std::move(vm));
        }
        model.channels.push_back(std::move(ch));
    }

    model.schema.keep.assign(model.schema.features.size(), 1);
    const FeatureMatrix raw = model.transform_raw(train);

    if (train.size() >= 2) {
        // Column statistics are taken over rows in id order so that permuting
        // the input cannot change any pruning decision.
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw.row_ids[a] < raw.row_ids[b]; });
        Matrix sorted(raw.values.rows(), raw.values.cols());
        for (std::size_t r = 0; r < order.size(); ++r) {
            const auto src = raw.values.row(order[r]);
            std::copy(src.begin(), src.end(), sorted.row(r).begin());
        }

        const Mask variance_keep = drop_zero_variance(sorted);
        const Mask corr_keep = prune_correlated(select_columns(sorted, variance_keep), config.correlation_threshold);
        std::size_t j = 0;
        for (std::size_t c = 0; c < variance_keep.size(); ++c) {
            if (!variance_keep[c]) {
                model.schema.keep[c] = 0;
                continue;
            }
            model.schema.keep[c] = corr_keep[j++];
        }
    }

    FeatureMatrix masked = select_columns(raw, model.schema.keep);
    if (config.centroid) {
        const auto groups = group_ids(train);
        model.centroids = group_centroids(masked, groups);
        result.features = centroid_augment(masked, groups, *model.centroids);
    } else {
        result.features = std::move(masked);
    }
    return result;
}

}  // namespace pdbpe
