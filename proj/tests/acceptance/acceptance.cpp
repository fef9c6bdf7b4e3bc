// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pdbpe/bpe.hpp"
#include "pdbpe/cli.hpp"
#include "pdbpe/eval.hpp"
#include "pdbpe/features.hpp"
#include "pdbpe/io.hpp"
#include "pdbpe/pipeline.hpp"
#include "pdbpe/preprocess.hpp"
#include "pdbpe/synthetic.hpp"
#include "pdbpe/variations.hpp"

using namespace pdbpe;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kWorkedExamplesSeconds = 1.0;
constexpr int kOracleCorpora = 500;
constexpr double kOracleSeconds = 30.0;
constexpr int kRoundTripSeries = 1000;
constexpr double kMaxCorrelation = 0.95;
constexpr double kWhiteningTolerance = 1e-6;
constexpr double kMinAccuracy = 0.90;
constexpr double kMinMotifCoverage = 0.60;
constexpr double kEndToEndSeconds = 60.0;
constexpr std::size_t kScaleSeries = 12000;
constexpr double kScaleSeconds = 120.0;
constexpr double kScaleMemoryBytes = 2.0 * 1024 * 1024 * 1024;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> row;
        std::stringstream s(line);
        for (std::string f; std::getline(s, f, ',');) row.push_back(f);
        rows.push_back(row);
    }
    return rows;
}

Outcome worked_examples() {
    const auto t0 = Clock::now();
    const SymbolSeq x{1, 1, 2, 2, 2, 0, 0, 0, 4};
    RcsmMedians medians;
    for (Symbol s = 0; s < 5; ++s) medians.medians[s] = 2;
    const bool rcs = apply_rcs(x) == SymbolSeq{1, 2, 0, 4};
    const bool rcsm = apply_rcsm(x, medians) == SymbolSeq{1, 2, 2, 0, 0, 4};
    const bool ar = apply_autoregressive(x) == SymbolSeq{0, 1, 0, 0, -2, 0, 0, 4};
    const double secs = seconds_since(t0);
    return {rcs && rcsm && ar && secs < kWorkedExamplesSeconds,
            std::string("RCS ") + (rcs ? "ok" : "MISMATCH") + ", RCSM " + (rcsm ? "ok" : "MISMATCH") + ", AR " +
                (ar ? "ok" : "MISMATCH") + ", " + fmt("%.4f s", secs)};
}

Outcome stopping_threshold(const fs::path& dir) {
    // Library level: the miner's own bookkeeping.
    std::mt19937_64 rng(100);
    std::vector<SymbolSeq> corpus(100, SymbolSeq(500));
    for (auto& s : corpus)
        for (auto& v : s) v = static_cast<Symbol>(rng() % 10);
    const auto fit = fit_bpe(corpus, 10, {0.2, 0.001, 0});
    const bool lib = fit.pair_slots == 49900 && fit.threshold == 49.9;

    // Command level: the reported numbers in the discover log.
    std::ostringstream data;
    data << "series_id,channel,t,value\n";
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t t = 0; t < 500; ++t) data << "s" << i << ",x," << t << ',' << corpus[i][t] << '\n';
    io::write_file_atomic(dir / "threshold.csv", data.str());
    const auto r = cli({"discover", "--data", (dir / "threshold.csv").string(), "-W", "1", "--set",
                        "variations=ORIGINAL", "--model-out", (dir / "threshold.json").string(), "--features-out",
                        (dir / "threshold_features.csv").string()});
    const bool logged = r.code == 0 && r.err.find("T=49900, threshold 49.9)") != std::string::npos;
    return {lib && logged, "T=" + std::to_string(fit.pair_slots) + ", threshold " + fmt("%.15g", fit.threshold) +
                               ", log " + (logged ? "reports T=49900, threshold 49.9" : "MISSING")};
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2718);
    int mismatches = 0;
    std::size_t rules = 0;
    for (int trial = 0; trial < kOracleCorpora; ++trial) {
        const int alphabet = 1 + static_cast<int>(rng() % 6);
        std::vector<SymbolSeq> corpus(1 + rng() % 10);
        for (auto& s : corpus) {
            s.resize(rng() % 31);
            for (auto& v : s) v = static_cast<Symbol>(rng() % alphabet);
        }
        // Spread the thresholds so some corpora merge deep and some stop early.
        const double P = 0.05 + 0.01 * static_cast<double>(rng() % 30);
        const double U = 0.001 + 0.001 * static_cast<double>(rng() % 50);
        const auto fast = fit_bpe(corpus, alphabet, {P, U, 0});
        const auto slow = oracle::naive_bpe(corpus, alphabet, P, U);
        rules += slow.rules.size();
        if (!(fast.vocab.rules() == slow.rules) || fast.encoded != slow.encoded) ++mismatches;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < kOracleSeconds,
            std::to_string(kOracleCorpora) + " corpora, " + std::to_string(rules) + " rules, " +
                std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", secs)};
}

Outcome round_trip() {
    std::mt19937_64 rng(31415);
    // Vocabulary learned on one random corpus, then applied to fresh series.
    std::vector<SymbolSeq> train(50, SymbolSeq(80));
    for (auto& s : train)
        for (auto& v : s) v = static_cast<Symbol>(rng() % 4);
    const auto fit = fit_bpe(train, 4, {0.05, 0.001, 0});
    int failures = 0;
    for (int i = 0; i < kRoundTripSeries; ++i) {
        SymbolSeq x(rng() % 200);
        for (auto& v : x) v = static_cast<Symbol>(rng() % 4);
        SymbolSeq back;
        for (Symbol s : fit.vocab.encode(x)) {
            const auto& d = fit.vocab.decode(s);
            back.insert(back.end(), d.begin(), d.end());
        }
        failures += back != x;
    }
    return {failures == 0, std::to_string(kRoundTripSeries) + " series through " +
                               std::to_string(fit.vocab.rules().size()) + " rules, " + std::to_string(failures) +
                               " failures"};
}

Outcome determinism(const fs::path& dir) {
    const auto data = (dir / "det.csv").string(), labels = (dir / "det_labels.csv").string();
    if (cli({"synth", "--series", "300", "--seed", "5", "--groups", "20", "--data-out", data, "--labels-out", labels})
            .code != 0)
        return {false, "could not generate data"};
    std::string model[2], features[2];
    const char* threads[2] = {"1", "8"};
    for (int i = 0; i < 2; ++i) {
        setenv("PDBPE_THREADS", threads[i], 1);
        const auto m = dir / ("det_model_" + std::string(threads[i]) + ".json");
        const auto f = dir / ("det_features_" + std::string(threads[i]) + ".csv");
        const auto r = cli({"discover", "--data", data, "--labels", labels, "--set", "centroid=true", "--model-out",
                            m.string(), "--features-out", f.string()});
        if (r.code != 0) return {false, "discover failed: " + r.err};
        model[i] = oracle::slurp(m);
        features[i] = oracle::slurp(f);
    }
    unsetenv("PDBPE_THREADS");
    const bool same = model[0] == model[1] && features[0] == features[1];
    return {same, std::string("model ") + (model[0] == model[1] ? "identical" : "DIFFERS") + " (" +
                      std::to_string(model[0].size()) + " bytes), features " +
                      (features[0] == features[1] ? "identical" : "DIFFERS") + " (" +
                      std::to_string(features[0].size()) + " bytes)"};
}

Outcome pruning_contract() {
    synthetic::MotifSpec spec;
    spec.series = 300;
    spec.seed = 99;
    const auto fit = fit_pipeline(synthetic::make_motif_dataset(spec).data, PipelineConfig{});
    const Matrix& m = fit.features.values;
    std::vector<std::vector<double>> cols;
    for (std::size_t c = 0; c < m.cols(); ++c) cols.push_back(m.column(c));
    double max_corr = 0.0, min_var = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        min_var = std::min(min_var, oracle::variance(cols[i]));
        for (std::size_t j = i + 1; j < cols.size(); ++j)
            max_corr = std::max(max_corr, std::abs(oracle::correlation(cols[i], cols[j])));
    }
    return {m.rows() == 300 && max_corr <= kMaxCorrelation && min_var > 0.0,
            std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", max |r| " + fmt("%.4f", max_corr) +
                ", min variance " + fmt("%.3g", min_var)};
}

Outcome whitening_contract() {
    std::mt19937_64 rng(1618);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    int cases = 0;
    for (std::size_t d : {2u, 3u}) {
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> mix(d * d);
            for (auto& v : mix) v = g(rng);
            Matrix x(500, d);
            for (std::size_t r = 0; r < 500; ++r) {
                std::vector<double> z(d);
                for (auto& v : z) v = g(rng);
                for (std::size_t i = 0; i < d; ++i) {
                    double s = static_cast<double>(i) * 2.0;
                    for (std::size_t j = 0; j < d; ++j) s += mix[i * d + j] * z[j];
                    x(r, i) = s;
                }
            }
            const Matrix w = whiten_multivariate(x, fit_whitening(x, Mask(500 * d, 1)));
            // Oracle: explicit covariance of the transformed rows.
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const auto a = w.column(i), b = w.column(j);
                    double ma = 0, mb = 0;
                    for (std::size_t r = 0; r < 500; ++r) {
                        ma += a[r] / 500.0;
                        mb += b[r] / 500.0;
                    }
                    double c = 0;
                    for (std::size_t r = 0; r < 500; ++r) c += (a[r] - ma) * (b[r] - mb) / 500.0;
                    worst = std::max(worst, std::abs(c - (i == j ? 1.0 : 0.0)));
                }
            ++cases;
        }
    }
    return {worst <= kWhiteningTolerance,
            std::to_string(cases) + " random 2/3-channel series, max |cov - I| " + fmt("%.3g", worst)};
}

Outcome end_to_end(const fs::path& dir) {
    const auto t0 = Clock::now();
    const synthetic::MotifSpec spec;  // 200 series, length 288, 12-step motif, sigma 0.3, 10% missing
    const auto generated = synthetic::make_motif_dataset(spec);
    const Dataset& data = generated.data;

    eval::EvalSettings settings;  // 1-NN accuracy
    const std::vector<int> k{10}, w{8};
    const auto report = eval::nested_cv(data, PipelineConfig{}, k, w, settings, {5, 3, 0, false});

    // Inspect through the command surface, exactly as a user would.
    std::ostringstream d, l;
    io::write_data_csv(d, data);
    l << "series_id,label\n";
    for (const auto& s : data.series()) l << s.id << ',' << std::get<std::string>(*s.label) << '\n';
    io::write_file_atomic(dir / "e2e.csv", d.str());
    io::write_file_atomic(dir / "e2e_labels.csv", l.str());
    const auto disc = cli({"discover", "--data", (dir / "e2e.csv").string(), "--model-out",
                           (dir / "e2e.json").string(), "--features-out", (dir / "e2e_features.csv").string()});
    const auto insp = cli({"inspect", "--model", (dir / "e2e.json").string(), "--features",
                           (dir / "e2e_features.csv").string(), "--labels", (dir / "e2e_labels.csv").string(),
                           "--data", (dir / "e2e.csv").string(), "--top", "5", "--spans-out",
                           (dir / "e2e_spans.csv").string()});
    if (disc.code != 0 || insp.code != 0) return {false, "discover/inspect failed: " + disc.err + insp.err};

    // Coverage of the planted motifs by each listed pattern's spans.
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> spans;  // feature|series -> spans
    std::set<std::string> listed;
    for (const auto& row : read_csv(oracle::slurp(dir / "e2e_spans.csv"))) {
        if (row.size() != 4 || row[0] == "series_id") continue;
        listed.insert(row[1]);
        spans[row[1] + "|" + row[0]].push_back({std::stoul(row[2]), std::stoul(row[3])});
    }
    double best = 0.0;
    std::string best_feature;
    for (const auto& feature : listed) {
        std::size_t hit = 0;
        for (const auto& m : generated.motifs) {
            const std::size_t lo = m.start, hi = m.start + m.length - 1;
            const auto it = spans.find(feature + "|" + m.series_id);
            if (it == spans.end()) continue;
            for (const auto& [s, e] : it->second)
                if (s <= hi && e >= lo) {
                    ++hit;
                    break;
                }
        }
        const double coverage = static_cast<double>(hit) / static_cast<double>(generated.motifs.size());
        if (coverage > best) {
            best = coverage;
            best_feature = feature;
        }
    }
    const double secs = seconds_since(t0);
    return {report.mean_metric >= kMinAccuracy && best >= kMinMotifCoverage && secs < kEndToEndSeconds,
            "5-fold 1-NN accuracy " + fmt("%.3f", report.mean_metric) + ", best top-5 pattern " + best_feature +
                " covers " + fmt("%.1f%%", 100.0 * best) + " of planted motifs, " + fmt("%.1f s", secs)};
}

// Runs in a forked child so its peak RSS is its own.
int scale_child(int fd) {
    synthetic::MotifSpec spec;
    spec.series = kScaleSeries;
    spec.seed = 12;
    const Dataset data = synthetic::make_motif_dataset(spec).data;
    PipelineConfig config;
    config.K = 10;
    config.W = 8;
    const auto t0 = Clock::now();
    const auto fit = fit_pipeline(data, config);
    const double secs = seconds_since(t0);
    const std::string msg = std::to_string(secs) + " " + std::to_string(fit.features.values.rows()) + " " +
                            std::to_string(fit.features.values.cols());
    if (write(fd, msg.data(), msg.size()) < 0) return 1;
    return 0;
}

Outcome scale() {
    int fds[2];
    if (pipe(fds) != 0) return {false, "pipe failed"};
    const pid_t pid = fork();
    if (pid == 0) {
        close(fds[0]);
        _exit(scale_child(fds[1]));
    }
    close(fds[1]);
    std::string msg;
    char buf[256];
    for (ssize_t n; (n = read(fds[0], buf, sizeof buf)) > 0;) msg.append(buf, static_cast<std::size_t>(n));
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    rusage usage{};
    getrusage(RUSAGE_CHILDREN, &usage);
    const double peak = static_cast<double>(usage.ru_maxrss) * 1024.0;  // KiB on Linux
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0 || msg.empty()) return {false, "scale run crashed"};
    double secs = 0;
    std::size_t rows = 0, cols = 0;
    std::istringstream(msg) >> secs >> rows >> cols;
    return {secs < kScaleSeconds && peak < kScaleMemoryBytes && rows == kScaleSeries,
            std::to_string(rows) + " series x 288, " + std::to_string(cols) + " features, " + fmt("%.1f s", secs) +
                ", peak RSS " + fmt("%.0f MiB", peak / (1024.0 * 1024.0))};
}

Outcome feature_bookkeeping(const fs::path& dir) {
    const auto data = (dir / "count.csv").string();
    if (cli({"synth", "--data-out", data}).code != 0) return {false, "could not generate data"};
    const auto r = cli({"discover", "--data", data, "--model-out", (dir / "count.json").string(), "--features-out",
                        (dir / "count_features.csv").string()});
    if (r.code != 0) return {false, "discover failed: " + r.err};
    const auto pos = r.err.find("feature dimension ");
    if (pos == std::string::npos) return {false, "no feature dimension in the log"};
    const std::size_t reported = std::stoul(r.err.substr(pos + 18));
    const std::size_t written = read_csv(oracle::slurp(dir / "count_features.csv")).front().size() - 1;

    // Independent recount: rerun the naive miner on each corpus, filter by
    // support, then redo both pruning passes by exhaustive scan.
    const FittedModel model = io::load_model(dir / "count.json");
    const Dataset train = io::read_data_csv(data);
    const double floor = static_cast<double>(train.size()) * model.config.P;
    std::size_t raw = 0;
    for (std::size_t c = 0; c < model.channels.size(); ++c) {
        const ChannelModel& ch = model.channels[c];
        for (Variation v : model.config.variations) {
            std::vector<SymbolSeq> corpus;
            for (const auto& s : train.series())
                corpus.push_back(make_variation(model.symbolize(s)[c], v, model.config.K, ch.medians));
            const int base = base_alphabet_size(v, model.config.K);
            const auto naive = oracle::naive_bpe(corpus, base, model.config.P, model.config.U);
            std::size_t supported = 0;
            for (const auto& rule : naive.rules) supported += static_cast<double>(rule.train_series_support) >= floor;
            raw += static_cast<std::size_t>(base) + supported;
        }
    }
    const FeatureMatrix full = model.transform_raw(train);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return full.row_ids[a] < full.row_ids[b]; });
    std::vector<std::vector<double>> kept;
    std::size_t pruned = 0;
    for (std::size_t c = 0; c < full.values.cols(); ++c) {
        std::vector<double> col;
        for (std::size_t r : order) col.push_back(full.values(r, c));
        bool drop = oracle::variance(col) < 1e-15;
        for (std::size_t k = 0; k < kept.size() && !drop; ++k)
            drop = std::abs(oracle::correlation(kept[k], col)) > model.config.correlation_threshold;
        if (drop)
            ++pruned;
        else
            kept.push_back(col);
    }
    const std::size_t recount = raw - pruned;
    return {raw == full.values.cols() && reported == recount && written == recount,
            "reported " + std::to_string(reported) + ", written " + std::to_string(written) + ", recount " +
                std::to_string(raw) + " - " + std::to_string(pruned) + " pruned = " + std::to_string(recount)};
}

}  // namespace

int main() {
    const fs::path dir = oracle::scratch_dir("acceptance");
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {9, "scale: 12k series pattern extraction", [] { return scale(); }},
        {1, "worked examples reproduced", [] { return worked_examples(); }},
        {2, "stopping-criterion arithmetic", [&] { return stopping_threshold(dir); }},
        {3, "miner matches naive oracle", [] { return oracle_equivalence(); }},
        {4, "encode/decode round trip", [] { return round_trip(); }},
        {5, "thread-count determinism", [&] { return determinism(dir); }},
        {6, "pruning contract", [] { return pruning_contract(); }},
        {7, "whitening contract", [] { return whitening_contract(); }},
        {8, "synthetic end-to-end", [&] { return end_to_end(dir); }},
        {10, "feature-count bookkeeping", [&] { return feature_bookkeeping(dir); }},
    };

    std::map<int, std::string> lines;
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        lines[c.id] = std::string(o.pass ? "PASS" : "FAIL") + "  criterion " + std::to_string(c.id) + ": " +
                      c.title + " -- " + o.detail;
    }
    for (const auto& [_, line] : lines) std::cout << line << '\n';
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
