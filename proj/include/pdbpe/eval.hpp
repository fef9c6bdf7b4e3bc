#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdbpe/pipeline.hpp"
#include "pdbpe/types.hpp"

namespace pdbpe::eval {

/// Fold assignment for k-fold cross validation.
struct CvPlan {
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    bool group_aware = false;
    std::vector<std::size_t> fold_of;  // per row

    std::vector<std::size_t> train_indices(std::size_t fold) const;
    std::vector<std::size_t> test_indices(std::size_t fold) const;
};

/// Seeded Fisher-Yates shuffle of the units (rows, or groups when `groups` is
/// non-empty), then round-robin assignment to folds.
CvPlan kfold_split(std::span<const std::string> ids, std::size_t k, std::uint64_t seed,
                   std::span<const std::string> groups = {});

/// Column standardization with training statistics; zero-variance columns keep scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
};

struct RidgeModel {
    Standardizer standardizer;
    std::vector<double> weights;  // in standardized units
    double intercept = 0.0;
    double lambda = 0.0;
};

/// Solves (Xs^T Xs + lambda I) w = Xs^T (y - mean y) on standardized features;
/// the intercept is mean(y) and is not penalized.
RidgeModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda);
std::vector<double> ridge_predict(const RidgeModel& model, const Matrix& x);

/// Majority vote of the k nearest rows (Euclidean). Vote ties go to the class
/// with the smallest mean neighbour distance, then the smallest label.
std::string knn_predict(const Matrix& train, std::span<const std::string> labels, std::span<const double> query,
                        std::size_t k);

/// Fraction of the k nearest neighbours labelled `positive`.
double knn_positive_fraction(const Matrix& train, std::span<const std::string> labels,
                             std::span<const double> query, std::size_t k, const std::string& positive);

double rmse(std::span<const double> y, std::span<const double> predicted);
double accuracy(std::span<const std::string> y, std::span<const std::string> predicted);
/// Rank-statistic AUC with mid-ranks for ties. Needs both classes present.
double auc_roc(std::span<const std::uint8_t> positive, std::span<const double> scores);

enum class Task { Regression, Classification };
enum class Learner { Knn, Ridge };

struct EvalSettings {
    Task task = Task::Classification;
    Learner learner = Learner::Knn;
    std::size_t knn_k = 1;
    double lambda = 1.0;
    /// Score classification by AUC-ROC instead of accuracy (binary labels only).
    bool auc = false;
    /// Positive class for AUC; empty = last label in sorted order.
    std::string positive_label;
};

/// Name of the reported metric: "rmse", "accuracy" or "auc".
std::string metric_name(const EvalSettings& settings);

struct SplitOutcome {
    double metric = 0.0;       // in the metric's natural orientation
    double score = 0.0;        // higher is better (negated RMSE)
    std::size_t features = 0;  // output width of the fitted pipeline
    std::uint64_t fingerprint = 0;
};

/// Fits the pipeline on `train`, transforms `test`, trains the learner on
/// standardized features and scores it.
SplitOutcome evaluate_split(const Dataset& train, const Dataset& test, const PipelineConfig& config,
                            const EvalSettings& settings);

struct GridPoint {
    int K = 0;
    int W = 0;
    double score = 0.0;  // mean inner score, -inf when the config could not be fitted
};

struct GridResult {
    PipelineConfig best;
    double best_score = 0.0;
    std::vector<GridPoint> table;
};

/// Mean score over the folds of `plan` for every (K, W); best wins, ties go to smaller K then W.
GridResult grid_search(const Dataset& data, std::span<const int> k_grid, std::span<const int> w_grid,
                       const PipelineConfig& base, const CvPlan& plan, const EvalSettings& settings);

struct FoldReport {
    std::size_t fold = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    int K = 0;
    int W = 0;
    double metric = 0.0;
    std::size_t features = 0;
    std::uint64_t fingerprint = 0;
};

struct EvalReport {
    std::string metric;
    std::vector<FoldReport> folds;
    double mean_metric = 0.0;
    CvPlan outer;
};

struct NestedCvSettings {
    std::size_t outer_folds = 5;
    std::size_t inner_folds = 3;
    std::uint64_t seed = 0;
    bool group_aware = false;
};

/// Outer k-fold evaluation; when either grid has more than one point the
/// hyperparameters are picked per outer fold by an inner grid search.
EvalReport nested_cv(const Dataset& data, const PipelineConfig& base, std::span<const int> k_grid,
                     std::span<const int> w_grid, const EvalSettings& settings, const NestedCvSettings& cv);

std::vector<std::string> class_labels(const Dataset& data);
std::vector<double> regression_targets(const Dataset& data);

}  // namespace pdbpe::eval
