#include "pdbpe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "pdbpe/io.hpp"

namespace pdbpe::eval {

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

// Cholesky solve of a symmetric system; false when not positive definite.
bool solve_spd(std::vector<double> a, std::vector<double>& b, std::size_t n) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a[i * n + i]);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 1e-12 * max_diag) || !(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return true;
}

struct Neighbour {
    double distance;
    std::size_t row;
};

std::vector<Neighbour> nearest(const Matrix& train, std::span<const double> query, std::size_t k) {
    if (k < 1) throw ConfigError("k-NN needs k >= 1");
    if (k > train.rows())
        throw ConfigError("k-NN k=" + std::to_string(k) + " exceeds the " + std::to_string(train.rows()) +
                          " training rows");
    if (query.size() != train.cols()) throw DataError("k-NN query width differs from training features");
    std::vector<Neighbour> all(train.rows());
    for (std::size_t r = 0; r < train.rows(); ++r) {
        double s = 0.0;
        const auto row = train.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) s += (row[c] - query[c]) * (row[c] - query[c]);
        all[r] = {std::sqrt(s), r};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const Neighbour& a, const Neighbour& b) {
                          return a.distance != b.distance ? a.distance < b.distance : a.row < b.row;
                      });
    all.resize(k);
    return all;
}

std::string positive_class(std::span<const std::string> labels, const EvalSettings& settings) {
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() != 2)
        throw DataError("AUC needs exactly two classes, found " + std::to_string(distinct.size()));
    if (settings.positive_label.empty()) return *distinct.rbegin();
    if (!distinct.contains(settings.positive_label))
        throw DataError("positive label '" + settings.positive_label + "' does not occur in the labels");
    return settings.positive_label;
}

}  // namespace

std::vector<std::size_t> CvPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> CvPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

CvPlan kfold_split(std::span<const std::string> ids, std::size_t k, std::uint64_t seed,
                   std::span<const std::string> groups) {
    if (k < 2) throw ConfigError("k-fold needs k >= 2");
    CvPlan plan;
    plan.folds = k;
    plan.seed = seed;
    plan.group_aware = !groups.empty();
    plan.fold_of.assign(ids.size(), 0);

    if (!plan.group_aware) {
        if (k > ids.size())
            throw ConfigError("cannot split " + std::to_string(ids.size()) + " rows into " + std::to_string(k) +
                              " folds");
        const auto order = seeded_permutation(ids.size(), seed);
        for (std::size_t pos = 0; pos < order.size(); ++pos) plan.fold_of[order[pos]] = pos % k;
        return plan;
    }

    if (groups.size() != ids.size()) throw DataError("group ids do not match rows");
    std::vector<std::string> units;
    std::map<std::string, std::size_t> unit_of;
    for (const auto& g : groups) {
        if (g.empty()) throw DataError("group-aware folds need a group id on every row");
        if (unit_of.emplace(g, units.size()).second) units.push_back(g);
    }
    if (k > units.size())
        throw ConfigError("cannot split " + std::to_string(units.size()) + " groups into " + std::to_string(k) +
                          " folds");
    const auto order = seeded_permutation(units.size(), seed);
    std::vector<std::size_t> fold_of_unit(units.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) fold_of_unit[order[pos]] = pos % k;
    for (std::size_t i = 0; i < ids.size(); ++i) plan.fold_of[i] = fold_of_unit[unit_of.at(groups[i])];
    return plan;
}

Standardizer Standardizer::fit(const Matrix& x) {
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    if (x.rows() == 0) return s;
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) m += x(r, c);
        m /= n;
        double ss = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - m) * (x(r, c) - m);
        const double sd = std::sqrt(ss / n);
        s.mean[c] = m;
        s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw DataError("standardizer width differs from features");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    return out;
}

RidgeModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
    if (x.rows() != y.size()) throw DataError("ridge: feature rows and targets differ");
    if (x.rows() == 0) throw DataError("ridge: no training rows");
    RidgeModel model;
    model.lambda = lambda;
    model.standardizer = Standardizer::fit(x);
    const Matrix xs = model.standardizer.apply(x);
    const std::size_t p = x.cols();

    double ymean = 0.0;
    for (double v : y) ymean += v;
    ymean /= static_cast<double>(y.size());
    model.intercept = ymean;
    model.weights.assign(p, 0.0);
    if (p == 0) return model;

    std::vector<double> a(p * p, 0.0);
    std::vector<double> b(p, 0.0);
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        const double yc = y[r] - ymean;
        for (std::size_t i = 0; i < p; ++i) {
            b[i] += row[i] * yc;
            for (std::size_t j = 0; j <= i; ++j) a[i * p + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        a[i * p + i] += lambda;
        for (std::size_t j = 0; j < i; ++j) a[j * p + i] = a[i * p + j];
    }
    if (!solve_spd(std::move(a), b, p)) {
        throw NumericError(lambda == 0.0 ? "ridge system is singular at lambda = 0; use lambda > 0"
                                         : "ridge system is not positive definite");
    }
    model.weights = std::move(b);
    return model;
}

std::vector<double> ridge_predict(const RidgeModel& model, const Matrix& x) {
    const Matrix xs = model.standardizer.apply(x);
    std::vector<double> out(x.rows(), model.intercept);
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out[r] += model.weights[c] * row[c];
    }
    return out;
}

std::string knn_predict(const Matrix& train, std::span<const std::string> labels, std::span<const double> query,
                        std::size_t k) {
    if (labels.size() != train.rows()) throw DataError("k-NN labels do not match training rows");
    struct Tally {
        std::size_t votes = 0;
        double distance = 0.0;
    };
    std::map<std::string, Tally> tally;
    for (const Neighbour& n : nearest(train, query, k)) {
        Tally& t = tally[labels[n.row]];
        ++t.votes;
        t.distance += n.distance;
    }
    const std::string* best = nullptr;
    Tally best_tally;
    for (const auto& [label, t] : tally) {  // map order = canonical label order
        if (best == nullptr) {
            best = &label;
            best_tally = t;
            continue;
        }
        const double mean = t.distance / static_cast<double>(t.votes);
        const double best_mean = best_tally.distance / static_cast<double>(best_tally.votes);
        if (t.votes > best_tally.votes || (t.votes == best_tally.votes && mean < best_mean)) {
            best = &label;
            best_tally = t;
        }
    }
    return *best;
}

double knn_positive_fraction(const Matrix& train, std::span<const std::string> labels,
                             std::span<const double> query, std::size_t k, const std::string& positive) {
    if (labels.size() != train.rows()) throw DataError("k-NN labels do not match training rows");
    std::size_t hits = 0;
    for (const Neighbour& n : nearest(train, query, k)) hits += labels[n.row] == positive ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double rmse(std::span<const double> y, std::span<const double> predicted) {
    if (y.size() != predicted.size() || y.empty()) throw DataError("rmse: length mismatch or empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - predicted[i]) * (y[i] - predicted[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

double accuracy(std::span<const std::string> y, std::span<const std::string> predicted) {
    if (y.size() != predicted.size() || y.empty()) throw DataError("accuracy: length mismatch or empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == predicted[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

double auc_roc(std::span<const std::uint8_t> positive, std::span<const double> scores) {
    if (positive.size() != scores.size()) throw DataError("auc: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t m = i; m < j; ++m) {
            if (positive[order[m]]) {
                pos_rank_sum += mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs both positive and negative examples");
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::string metric_name(const EvalSettings& settings) {
    if (settings.task == Task::Regression) return "rmse";
    return settings.auc ? "auc" : "accuracy";
}

std::vector<std::string> class_labels(const Dataset& data) {
    std::vector<std::string> out;
    for (const auto& s : data.series()) {
        if (!s.label) throw DataError("series '" + s.id + "' has no label");
        if (!std::holds_alternative<std::string>(*s.label))
            throw DataError("series '" + s.id + "' has a numeric label; classification needs categorical labels");
        out.push_back(std::get<std::string>(*s.label));
    }
    return out;
}

std::vector<double> regression_targets(const Dataset& data) {
    std::vector<double> out;
    for (const auto& s : data.series()) {
        if (!s.label) throw DataError("series '" + s.id + "' has no label");
        if (!std::holds_alternative<double>(*s.label))
            throw DataError("series '" + s.id + "' has a categorical label; regression needs numeric labels");
        out.push_back(std::get<double>(*s.label));
    }
    return out;
}

SplitOutcome evaluate_split(const Dataset& train, const Dataset& test, const PipelineConfig& config,
                            const EvalSettings& settings) {
    const PipelineFit fit = fit_pipeline(train, config);
    const FeatureMatrix test_features = fit.model.transform(test);
    const Standardizer standardizer = Standardizer::fit(fit.features.values);
    const Matrix xtrain = standardizer.apply(fit.features.values);
    const Matrix xtest = standardizer.apply(test_features.values);

    SplitOutcome out;
    out.features = fit.features.values.cols();
    out.fingerprint = io::model_fingerprint(fit.model);

    if (settings.task == Task::Regression) {
        const auto ytrain = regression_targets(train);
        const auto ytest = regression_targets(test);
        std::vector<double> pred;
        if (settings.learner == Learner::Ridge) {
            pred = ridge_predict(ridge_fit(xtrain, ytrain, settings.lambda), xtest);
        } else {
            // k-NN regression: mean target of the neighbours.
            for (std::size_t r = 0; r < xtest.rows(); ++r) {
                double s = 0.0;
                for (const Neighbour& n : nearest(xtrain, xtest.row(r), settings.knn_k)) s += ytrain[n.row];
                pred.push_back(s / static_cast<double>(settings.knn_k));
            }
        }
        out.metric = rmse(ytest, pred);
        out.score = -out.metric;
        return out;
    }

    const auto ytrain = class_labels(train);
    const auto ytest = class_labels(test);
    if (settings.auc) {
        std::vector<std::string> all = ytrain;
        all.insert(all.end(), ytest.begin(), ytest.end());
        const std::string positive = positive_class(all, settings);
        std::vector<double> scores;
        if (settings.learner == Learner::Ridge) {
            std::vector<double> target;
            for (const auto& l : ytrain) target.push_back(l == positive ? 1.0 : 0.0);
            scores = ridge_predict(ridge_fit(xtrain, target, settings.lambda), xtest);
        } else {
            for (std::size_t r = 0; r < xtest.rows(); ++r)
                scores.push_back(knn_positive_fraction(xtrain, ytrain, xtest.row(r), settings.knn_k, positive));
        }
        std::vector<std::uint8_t> truth;
        for (const auto& l : ytest) truth.push_back(l == positive ? 1 : 0);
        out.metric = auc_roc(truth, scores);
        out.score = out.metric;
        return out;
    }

    if (settings.learner != Learner::Knn) throw ConfigError("classification accuracy uses the k-NN learner");
    std::vector<std::string> pred;
    for (std::size_t r = 0; r < xtest.rows(); ++r) pred.push_back(knn_predict(xtrain, ytrain, xtest.row(r), settings.knn_k));
    out.metric = accuracy(ytest, pred);
    out.score = out.metric;
    return out;
}

GridResult grid_search(const Dataset& data, std::span<const int> k_grid, std::span<const int> w_grid,
                       const PipelineConfig& base, const CvPlan& plan, const EvalSettings& settings) {
    if (k_grid.empty() || w_grid.empty()) throw ConfigError("grid search needs non-empty K and W grids");
    std::vector<int> ks(k_grid.begin(), k_grid.end());
    std::vector<int> ws(w_grid.begin(), w_grid.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    if (plan.fold_of.size() != data.size()) throw DataError("CV plan does not match the dataset");

    GridResult result;
    result.best_score = -std::numeric_limits<double>::infinity();
    bool have_best = false;
    for (int k : ks) {
        for (int w : ws) {
            PipelineConfig config = base;
            config.K = k;
            config.W = w;
            config.validate();
            double total = 0.0;
            bool failed = false;
            for (std::size_t f = 0; f < plan.folds && !failed; ++f) {
                const auto tr = plan.train_indices(f);
                const auto te = plan.test_indices(f);
                try {
                    total += evaluate_split(data.subset(tr), data.subset(te), config, settings).score;
                } catch (const DataError&) {
                    failed = true;
                } catch (const NumericError&) {
                    failed = true;
                }
            }
            const double score =
                failed ? -std::numeric_limits<double>::infinity() : total / static_cast<double>(plan.folds);
            result.table.push_back({k, w, score});
            if (!have_best || score > result.best_score) {
                have_best = true;
                result.best_score = score;
                result.best = config;
            }
        }
    }
    if (!std::isfinite(result.best_score)) throw DataError("no grid point could be fitted on this dataset");
    return result;
}

EvalReport nested_cv(const Dataset& data, const PipelineConfig& base, std::span<const int> k_grid,
                     std::span<const int> w_grid, const EvalSettings& settings, const NestedCvSettings& cv) {
    const auto ids = data.ids();
    const std::vector<std::string> groups = cv.group_aware ? group_ids(data) : std::vector<std::string>{};

    EvalReport report;
    report.metric = metric_name(settings);
    report.outer = kfold_split(ids, cv.outer_folds, cv.seed, groups);
    const bool search = k_grid.size() > 1 || w_grid.size() > 1;

    double total = 0.0;
    for (std::size_t f = 0; f < report.outer.folds; ++f) {
        const Dataset train = data.subset(report.outer.train_indices(f));
        const Dataset test = data.subset(report.outer.test_indices(f));

        PipelineConfig config = base;
        if (!k_grid.empty()) config.K = k_grid.front();
        if (!w_grid.empty()) config.W = w_grid.front();
        if (search) {
            const auto inner_ids = train.ids();
            const std::vector<std::string> inner_groups = cv.group_aware ? group_ids(train) : std::vector<std::string>{};
            const CvPlan inner = kfold_split(inner_ids, cv.inner_folds, cv.seed + 1 + f, inner_groups);
            config = grid_search(train, k_grid, w_grid, base, inner, settings).best;
        }

        const SplitOutcome outcome = evaluate_split(train, test, config, settings);
        report.folds.push_back(
            {f, train.size(), test.size(), config.K, config.W, outcome.metric, outcome.features, outcome.fingerprint});
        total += outcome.metric;
    }
    report.mean_metric = total / static_cast<double>(report.outer.folds);
    return report;
}

}  // namespace pdbpe::eval
