#include "pdbpe/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdbpe/eval.hpp"
#include "pdbpe/io.hpp"
#include "pdbpe/pipeline.hpp"
#include "pdbpe/synthetic.hpp"

namespace pdbpe::cli {

namespace {

struct ConfigOptions {
    std::string config_path;
    std::optional<int> K;
    std::optional<int> W;
    std::vector<std::string> overrides;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "Flat key = value pipeline config file");
        cmd.add_option("-K,--bins", K, "Number of discretization bins (overrides config)");
        cmd.add_option("-W,--window", W, "PAA window (overrides config)");
        cmd.add_option("--set", overrides, "Override any config key, e.g. --set P=0.1")->take_all();
    }

    PipelineConfig resolve() const {
        PipelineConfig config = config_path.empty() ? PipelineConfig{} : io::parse_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            io::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (K) config.K = *K;
        if (W) config.W = *W;
        config.validate();
        return config;
    }
};

Dataset load_dataset(const std::string& data_path, const std::string& labels_path, std::size_t min_observed,
                     std::ostream& err, std::optional<io::LabelKind> forced = std::nullopt) {
    Dataset data = io::read_data_csv(data_path);
    if (!labels_path.empty()) {
        const auto labels = io::read_labels_csv(labels_path);
        io::attach_labels(data, labels, forced ? *forced : io::detect_label_kind(labels));
    }
    const std::size_t before = data.size();
    Dataset kept = ingest_filter(data, min_observed);
    if (kept.size() != before)
        err << "dropped " << (before - kept.size()) << " series with fewer than " << min_observed
            << " observed timesteps\n";
    if (kept.empty()) throw DataError("no series left to process");
    return kept;
}

// Shortest text that reads back to the same double; for human-facing logs.
std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const SymbolSeq& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) out += (i ? " " : "") + std::to_string(seq[i]);
    return out;
}

const ChannelModel& stream_of(const FittedModel& model, const std::string& name) {
    for (const auto& ch : model.channels)
        if (ch.name == name) return ch;
    throw DataError("unknown stream '" + name + "'");
}

std::string value_ranges(const FittedModel& model, const FeatureDescriptor& f) {
    const Discretizer& d = stream_of(model, f.channel).discretizer;
    std::ostringstream out;
    out << std::setprecision(4);
    for (std::size_t i = 0; i < f.decoded.size(); ++i) {
        const Symbol s = f.decoded[i];
        if (i) out << ' ';
        if (f.variation == Variation::Autoregressive) {
            out << (s >= 0 ? "+" : "") << s << "(" << s * d.bin_width() << ")";
        } else {
            out << s << "[" << d.edges[static_cast<std::size_t>(s)] << ".." << d.edges[static_cast<std::size_t>(s) + 1]
                << ")";
        }
    }
    return out.str();
}

int cmd_discover(const std::string& data_path, const std::string& labels_path, const ConfigOptions& opts,
                 const std::string& model_out, const std::string& features_out, std::size_t min_observed,
                 std::ostream& err) {
    const PipelineConfig config = opts.resolve();
    const Dataset data = load_dataset(data_path, labels_path, min_observed, err);
    const PipelineFit fit = fit_pipeline(data, config);

    for (const auto& r : fit.report) {
        err << "stream " << r.channel << " variation " << variation_name(r.variation) << ": " << r.emitted_patterns
            << " patterns, " << r.features << " features (" << r.merges << " merges, T=" << r.pair_slots
            << ", threshold " << shortest(r.threshold) << ")\n";
    }
    err << "feature dimension " << fit.features.values.cols() << " (" << fit.model.schema.kept_count() << " of "
        << fit.model.schema.features.size() << " columns kept after pruning) for " << data.size() << " series\n";

    io::save_model(model_out, fit.model);
    io::write_features_csv(features_out, fit.features);
    return kSuccess;
}

int cmd_transform(const std::string& model_path, const std::string& data_path, const std::string& labels_path,
                  const std::string& features_out, std::size_t min_observed, std::ostream& err) {
    const FittedModel model = io::load_model(model_path);
    const Dataset data = load_dataset(data_path, labels_path, min_observed, err);
    io::write_features_csv(features_out, model.transform(data));
    return kSuccess;
}

struct InspectOptions {
    std::string model_path;
    std::string features_path;
    std::string data_path;
    std::string labels_path;
    std::string spans_out;
    std::size_t top = 10;
    bool rank = false;
    double period = 1.0;
    std::string unit = "steps";
};

int cmd_inspect(const InspectOptions& o, std::ostream& out, std::ostream& err) {
    if (o.rank && o.labels_path.empty()) throw ConfigError("ranking requested without --labels");
    const FittedModel model = io::load_model(o.model_path);
    const auto columns = model.output_columns();

    // Output column -> raw schema index.
    std::vector<std::size_t> raw_of;
    for (std::size_t i = 0; i < model.schema.features.size(); ++i)
        if (model.schema.keep[i]) raw_of.push_back(i);
    const std::size_t kept = raw_of.size();
    if (model.config.centroid)
        for (std::size_t i = 0; i < kept; ++i) raw_of.push_back(raw_of[i]);

    out << "model: " << model.channels.size() << " stream(s), K=" << model.config.K << ", W=" << model.config.W
        << ", " << columns.size() << " output columns\n";
    for (const auto& ch : model.channels) {
        for (const auto& vm : ch.variations) {
            out << "  " << ch.name << " " << variation_name(vm.variation) << ": " << vm.vocab.rules().size()
                << " merges, " << (vm.emitted.size() - static_cast<std::size_t>(vm.vocab.base_size()))
                << " patterns emitted, " << vm.emitted.size() << " features\n";
        }
    }
    if (o.top == 0) return kSuccess;

    Dataset data;
    if (!o.data_path.empty()) data = load_dataset(o.data_path, o.labels_path, 0, err);

    std::vector<std::size_t> order;
    std::vector<double> f_values;
    if (!o.labels_path.empty()) {
        const auto labels = io::read_labels_csv(o.labels_path);
        if (io::detect_label_kind(labels) != io::LabelKind::Classification)
            throw DataError("ranking needs categorical labels");
        FeatureMatrix features;
        if (!o.features_path.empty())
            features = io::read_features_csv(o.features_path);
        else if (!data.empty())
            features = model.transform(data);
        else
            throw ConfigError("ranking needs --features or --data");
        if (features.column_names != columns) throw DataError("feature columns do not match the model schema");

        std::vector<std::size_t> rows;
        std::vector<std::string> y;
        for (std::size_t r = 0; r < features.row_ids.size(); ++r) {
            const auto it = labels.find(features.row_ids[r]);
            if (it == labels.end() || it->second.label.empty()) continue;
            rows.push_back(r);
            y.push_back(it->second.label);
        }
        Matrix x(rows.size(), features.values.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = features.values.row(rows[i]);
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
        for (const auto& rf : anova_f_rank(x, y)) {
            order.push_back(rf.column);
            f_values.push_back(rf.f_value);
        }
    } else {
        for (std::size_t c = 0; c < kept; ++c) order.push_back(c);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return model.schema.features[raw_of[a]].support > model.schema.features[raw_of[b]].support;
        });
    }
    if (order.size() > o.top) order.resize(o.top);

    out << "rank,feature,stream,variation,decoded,values,steps,duration_" << o.unit << ",support"
        << (f_values.empty() ? "" : ",anova_f") << '\n';
    for (std::size_t i = 0; i < order.size(); ++i) {
        const FeatureDescriptor& f = model.schema.features[raw_of[order[i]]];
        const std::size_t steps = f.decoded.size();
        out << (i + 1) << ',' << columns[order[i]] << ',' << f.channel << ',' << variation_name(f.variation) << ','
            << join(f.decoded) << ',' << value_ranges(model, f) << ',' << steps << ','
            << io::format_double(static_cast<double>(steps) * model.config.W * o.period) << ',' << f.support;
        if (!f_values.empty()) out << ',' << io::format_double(f_values[i]);
        out << '\n';
    }

    if (!data.empty()) {
        std::ostringstream spans;
        spans << "series_id,feature,start,end\n";
        for (const auto& s : data.series()) {
            for (std::size_t c : order) {
                for (const auto& span : model.occurrence_spans(s, raw_of[c]))
                    spans << s.id << ',' << columns[c] << ',' << span.start << ',' << span.end << '\n';
            }
        }
        if (o.spans_out.empty())
            out << "# occurrence spans\n" << spans.str();
        else
            io::write_file_atomic(o.spans_out, spans.str());
    }
    return kSuccess;
}

std::vector<int> parse_grid(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string("invalid ") + what + " grid entry '" + item + "'");
        }
    }
    return out;
}

struct EvaluateOptions {
    std::string data_path;
    std::string labels_path;
    std::string report_out;
    std::string k_grid;
    std::string w_grid;
    std::string task;
    std::string learner = "knn";
    std::size_t knn_k = 1;
    double lambda = 1.0;
    bool auc = false;
    std::string positive;
    std::size_t folds = 5;
    std::size_t inner_folds = 3;
    std::uint64_t seed = 0;
    bool group_folds = false;
    std::size_t min_observed = 0;
};

int cmd_evaluate(const EvaluateOptions& o, const ConfigOptions& copts, std::ostream& out, std::ostream& err) {
    const PipelineConfig base = copts.resolve();
    const auto labels = io::read_labels_csv(o.labels_path);
    io::LabelKind kind;
    if (o.task.empty())
        kind = io::detect_label_kind(labels);
    else if (o.task == "regression")
        kind = io::LabelKind::Regression;
    else if (o.task == "classification")
        kind = io::LabelKind::Classification;
    else
        throw ConfigError("--task must be 'regression' or 'classification'");
    if (o.task == "classification") io::detect_label_kind(labels);  // still reject mixed label files

    Dataset all = load_dataset(o.data_path, o.labels_path, o.min_observed, err, kind);
    std::vector<std::size_t> labelled;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i].label) labelled.push_back(i);
    if (labelled.size() != all.size())
        err << "evaluating " << labelled.size() << " labelled series of " << all.size() << '\n';
    const Dataset data = all.subset(labelled);
    if (data.empty()) throw DataError("no labelled series to evaluate");

    eval::EvalSettings settings;
    settings.task = kind == io::LabelKind::Regression ? eval::Task::Regression : eval::Task::Classification;
    if (o.learner == "knn")
        settings.learner = eval::Learner::Knn;
    else if (o.learner == "ridge")
        settings.learner = eval::Learner::Ridge;
    else
        throw ConfigError("--learner must be 'knn' or 'ridge'");
    settings.knn_k = o.knn_k;
    settings.lambda = o.lambda;
    settings.auc = o.auc;
    settings.positive_label = o.positive;
    if (settings.auc && settings.task == eval::Task::Regression) throw ConfigError("--auc needs categorical labels");
    if (settings.task == eval::Task::Classification && !settings.auc && settings.learner == eval::Learner::Ridge)
        throw ConfigError("accuracy scoring uses the knn learner; add --auc to score ridge outputs");

    std::vector<int> ks = o.k_grid.empty() ? std::vector<int>{base.K} : parse_grid(o.k_grid, "K");
    std::vector<int> ws = o.w_grid.empty() ? std::vector<int>{base.W} : parse_grid(o.w_grid, "W");
    for (int k : ks)
        if (k < 2 || k > 100) throw ConfigError("K grid values must lie in [2, 100]");
    for (int w : ws)
        if (w < 1 || w > 15) throw ConfigError("W grid values must lie in [1, 15]");

    const eval::EvalReport report =
        eval::nested_cv(data, base, ks, ws, settings, {o.folds, o.inner_folds, o.seed, o.group_folds});

    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : report.folds) {
        char fp[32];
        std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(f.fingerprint));
        folds.push_back({{"fold", f.fold},
                         {"train_rows", f.train_rows},
                         {"test_rows", f.test_rows},
                         {"K", f.K},
                         {"W", f.W},
                         {report.metric, f.metric},
                         {"features", f.features},
                         {"model_fingerprint", fp}});
    }
    nlohmann::json doc = {{"metric", report.metric},
                          {"mean", report.mean_metric},
                          {"task", settings.task == eval::Task::Regression ? "regression" : "classification"},
                          {"learner", o.learner},
                          {"folds", folds},
                          {"outer_folds", o.folds},
                          {"inner_folds", o.inner_folds},
                          {"seed", o.seed},
                          {"group_aware", o.group_folds},
                          {"series", data.size()},
                          {"k_grid", ks},
                          {"w_grid", ws},
                          {"base_config", io::format_config(base)}};
    io::write_file_atomic(o.report_out, doc.dump(2) + "\n");
    out << report.metric << " mean over " << report.folds.size() << " folds: " << io::format_double(report.mean_metric)
        << '\n';
    return kSuccess;
}

struct SynthOptions {
    std::string kind = "motif";
    std::size_t series = 200;
    std::size_t length = 288;
    std::uint64_t seed = 7;
    std::size_t groups = 0;
    double background = synthetic::MotifSpec{}.background_amplitude;
    std::string data_out;
    std::string labels_out;
    std::string motifs_out;
};

int cmd_synth(const SynthOptions& o) {
    Dataset data;
    std::ostringstream motifs;
    if (o.kind == "motif") {
        synthetic::MotifSpec spec;
        spec.series = o.series;
        spec.length = o.length;
        spec.seed = o.seed;
        spec.groups = o.groups;
        spec.background_amplitude = o.background;
        auto generated = synthetic::make_motif_dataset(spec);
        data = std::move(generated.data);
        motifs << "series_id,start,length\n";
        for (const auto& m : generated.motifs) motifs << m.series_id << ',' << m.start << ',' << m.length << '\n';
    } else if (o.kind == "walk") {
        data = synthetic::make_random_walks(o.series, o.length, {"x"}, o.seed);
    } else {
        throw ConfigError("--kind must be 'motif' or 'walk'");
    }

    std::ostringstream d;
    io::write_data_csv(d, data);
    io::write_file_atomic(o.data_out, d.str());
    if (!o.labels_out.empty()) {
        std::ostringstream l;
        l << "series_id,label" << (o.groups ? ",group_id" : "") << '\n';
        for (const auto& s : data.series()) {
            l << s.id << ',';
            if (std::holds_alternative<double>(*s.label))
                l << io::format_double(std::get<double>(*s.label));
            else
                l << std::get<std::string>(*s.label);
            if (o.groups) l << ',' << s.group_id.value_or("");
            l << '\n';
        }
        io::write_file_atomic(o.labels_out, l.str());
    }
    if (!o.motifs_out.empty() && o.kind == "motif") io::write_file_atomic(o.motifs_out, motifs.str());
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pattern discovery in time series with byte pair encoding"};
    app.name("pdbpe");
    app.require_subcommand(1);

    std::string data_path, labels_path, model_path, features_path, model_out, features_out;
    std::size_t min_observed = 0;
    ConfigOptions discover_cfg;

    auto* discover = app.add_subcommand("discover", "Fit the pipeline and write the model and training features");
    discover->add_option("--data", data_path, "Long-format data CSV")->required();
    discover->add_option("--labels", labels_path, "Labels CSV (group ids are needed for centroid features)");
    discover->add_option("--model-out", model_out, "Model artifact to write")->required();
    discover->add_option("--features-out", features_out, "Feature matrix CSV to write")->required();
    discover->add_option("--min-observed", min_observed, "Drop series with fewer observed timesteps");
    discover_cfg.attach(*discover);

    auto* transform = app.add_subcommand("transform", "Apply a fitted model to new series");
    transform->add_option("--model", model_path, "Model artifact")->required();
    transform->add_option("--data", data_path, "Long-format data CSV")->required();
    transform->add_option("--labels", labels_path, "Labels CSV (group ids for centroid features)");
    transform->add_option("--features-out", features_out, "Feature matrix CSV to write")->required();
    transform->add_option("--min-observed", min_observed, "Drop series with fewer observed timesteps");

    InspectOptions inspect_opts;
    auto* inspect = app.add_subcommand("inspect", "List patterns, optionally ranked by ANOVA F, with occurrence spans");
    inspect->add_option("--model", inspect_opts.model_path, "Model artifact")->required();
    inspect->add_option("--features", inspect_opts.features_path, "Feature matrix CSV for ranking");
    inspect->add_option("--data", inspect_opts.data_path, "Data CSV for occurrence spans");
    inspect->add_option("--labels", inspect_opts.labels_path, "Categorical labels for ANOVA ranking");
    inspect->add_option("--top", inspect_opts.top, "Number of patterns to list (0 = summary only)");
    inspect->add_flag("--rank", inspect_opts.rank, "Require ANOVA ranking");
    inspect->add_option("--period", inspect_opts.period, "Sampling period of one original timestep");
    inspect->add_option("--unit", inspect_opts.unit, "Unit name of --period");
    inspect->add_option("--spans-out", inspect_opts.spans_out, "Write occurrence spans here instead of stdout");

    EvaluateOptions eval_opts;
    ConfigOptions eval_cfg;
    auto* evaluate = app.add_subcommand("evaluate", "Nested cross-validation with k-NN or ridge on pattern features");
    evaluate->add_option("--data", eval_opts.data_path, "Long-format data CSV")->required();
    evaluate->add_option("--labels", eval_opts.labels_path, "Labels CSV")->required();
    evaluate->add_option("--report-out", eval_opts.report_out, "Report file to write")->required();
    evaluate->add_option("--k-grid", eval_opts.k_grid, "Comma-separated K values");
    evaluate->add_option("--w-grid", eval_opts.w_grid, "Comma-separated W values");
    evaluate->add_option("--task", eval_opts.task, "regression or classification (default: from labels)");
    evaluate->add_option("--learner", eval_opts.learner, "knn or ridge");
    evaluate->add_option("--knn-k", eval_opts.knn_k, "Neighbours for k-NN");
    evaluate->add_option("--lambda", eval_opts.lambda, "Ridge penalty");
    evaluate->add_flag("--auc", eval_opts.auc, "Score binary classification by AUC-ROC");
    evaluate->add_option("--positive", eval_opts.positive, "Positive class for AUC");
    evaluate->add_option("--folds", eval_opts.folds, "Outer folds");
    evaluate->add_option("--inner-folds", eval_opts.inner_folds, "Inner folds for the grid search");
    evaluate->add_option("--seed", eval_opts.seed, "Fold shuffling seed");
    evaluate->add_flag("--group-folds", eval_opts.group_folds, "Keep every group inside one fold");
    evaluate->add_option("--min-observed", eval_opts.min_observed, "Drop series with fewer observed timesteps");
    eval_cfg.attach(*evaluate);

    SynthOptions synth_opts;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--kind", synth_opts.kind, "motif or walk");
    synth->add_option("--series", synth_opts.series, "Number of series");
    synth->add_option("--length", synth_opts.length, "Timesteps per series");
    synth->add_option("--seed", synth_opts.seed, "Random seed");
    synth->add_option("--groups", synth_opts.groups, "Number of group ids to assign (motif only)");
    synth->add_option("--background", synth_opts.background, "Amplitude of the shared slow oscillation (motif only)");
    synth->add_option("--data-out", synth_opts.data_out, "Data CSV to write")->required();
    synth->add_option("--labels-out", synth_opts.labels_out, "Labels CSV to write");
    synth->add_option("--motifs-out", synth_opts.motifs_out, "Planted motif locations CSV to write");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (*discover)
            return cmd_discover(data_path, labels_path, discover_cfg, model_out, features_out, min_observed, err);
        if (*transform) return cmd_transform(model_path, data_path, labels_path, features_out, min_observed, err);
        if (*inspect) return cmd_inspect(inspect_opts, out, err);
        if (*evaluate) return cmd_evaluate(eval_opts, eval_cfg, out, err);
        if (*synth) return cmd_synth(synth_opts);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace pdbpe::cli
