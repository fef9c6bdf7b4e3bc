#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "pdbpe/features.hpp"

using namespace pdbpe;

namespace {

Matrix from_columns(const std::vector<std::vector<double>>& cols) {
    Matrix m(cols[0].size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < cols[c].size(); ++r) m(r, c) = cols[c][r];
    return m;
}

FeatureMatrix named(const Matrix& m) {
    FeatureMatrix f;
    for (std::size_t r = 0; r < m.rows(); ++r) f.row_ids.push_back("r" + std::to_string(r));
    for (std::size_t c = 0; c < m.cols(); ++c) f.column_names.push_back("c" + std::to_string(c));
    f.values = m;
    return f;
}

}  // namespace

TEST_CASE("count features examples") {
    SymbolSeq encoded(10, 0);
    encoded[3] = encoded[7] = 5;
    const std::vector<Symbol> pattern{5};
    CHECK(count_features(encoded, pattern)[0] == 0.2);

    const SymbolSeq aab{0, 0, 1};
    const std::vector<Symbol> base{0, 1};
    const auto f = count_features(aab, base);
    CHECK(f[0] == 2.0 / 3.0);
    CHECK(f[1] == 1.0 / 3.0);

    CHECK(count_features(SymbolSeq{}, base) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("counts are invariant to self-concatenation") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        SymbolSeq x(2 + rng() % 30);
        for (auto& s : x) s = static_cast<Symbol>(rng() % 6);
        SymbolSeq xx = x;
        xx.insert(xx.end(), x.begin(), x.end());
        const std::vector<Symbol> schema{0, 1, 2, 3, 4, 5};
        const auto a = count_features(x, schema);
        const auto b = count_features(xx, schema);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
}

TEST_CASE("zero-variance columns") {
    const Matrix m = from_columns({{1, 1, 1, 1}, {1, 2, 3, 4}, {0, 0, 0, 5}});
    CHECK(drop_zero_variance(m) == Mask{0, 1, 1});
    const Matrix all = from_columns({{1, 2}, {3, 1}});
    CHECK(drop_zero_variance(all) == Mask{1, 1});
    CHECK_THROWS_AS(drop_zero_variance(from_columns({{1}})), DataError);
}

TEST_CASE("correlation pruning examples") {
    const std::vector<double> a{1, 2, 3, 5, 8};
    const std::vector<double> b{2, 7, 1, 8, 2};
    std::vector<double> neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    CHECK(prune_correlated(from_columns({a, b, a}), 0.95) == Mask{1, 1, 0});
    CHECK(prune_correlated(from_columns({a, neg, b}), 0.95) == Mask{1, 0, 1});
}

TEST_CASE("pruned output never exceeds the threshold") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 60, cols = 30;
        std::vector<std::vector<double>> columns;
        for (std::size_t c = 0; c < cols; ++c) {
            std::vector<double> col(rows);
            for (auto& v : col) v = g(rng);
            // Some columns are near copies of earlier ones.
            if (c > 0 && rng() % 3 == 0) {
                const auto& src = columns[rng() % c];
                for (std::size_t r = 0; r < rows; ++r) col[r] = src[r] + 0.05 * col[r];
            }
            columns.push_back(col);
        }
        const Matrix m = from_columns(columns);
        const Mask keep = prune_correlated(m, 0.95);
        for (std::size_t i = 0; i < cols; ++i) {
            if (!keep[i]) continue;
            for (std::size_t j = i + 1; j < cols; ++j)
                if (keep[j]) CHECK(std::abs(oracle::correlation(columns[i], columns[j])) <= 0.95);
        }
        // Every dropped column really did clash with an earlier kept one.
        for (std::size_t j = 0; j < cols; ++j) {
            if (keep[j]) continue;
            bool clash = false;
            for (std::size_t i = 0; i < j; ++i)
                clash |= keep[i] && std::abs(oracle::correlation(columns[i], columns[j])) > 0.95;
            CHECK(clash);
        }
    }
}

TEST_CASE("independent columns survive pruning") {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> columns(10, std::vector<double>(300));
    for (auto& c : columns)
        for (auto& v : c) v = g(rng);
    const Mask keep = prune_correlated(from_columns(columns), 0.95);
    for (auto k : keep) CHECK(k == 1);
}

TEST_CASE("pearson agrees with the two-pass oracle") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a[i] = g(rng);
        b[i] = 0.5 * a[i] + g(rng);
    }
    CHECK(pearson(a, b) == doctest::Approx(oracle::correlation(a, b)).epsilon(1e-12));
    const std::vector<double> flat(50, 1.0);
    CHECK(pearson(a, flat) == 0.0);
}

TEST_CASE("centroid augmentation examples") {
    const Matrix m = from_columns({{1, 3, 10}, {2, 6, 20}});
    const std::vector<std::string> groups{"g", "g", "solo"};
    const auto out = centroid_augment(named(m), groups);
    REQUIRE(out.values.cols() == 4);
    CHECK(out.column_names[2] == "c0@centroid");
    CHECK(out.values(0, 2) == 2.0);
    CHECK(out.values(0, 3) == 4.0);
    CHECK(out.values(1, 2) == 2.0);
    CHECK(out.values(2, 2) == 10.0);
    CHECK(out.values(2, 3) == 20.0);
    CHECK(out.values(1, 0) == 3.0);
}

TEST_CASE("centroid block is the group mean") {
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(40, 5);
    std::vector<std::string> groups;
    for (std::size_t r = 0; r < 40; ++r) {
        for (std::size_t c = 0; c < 5; ++c) m(r, c) = u(rng);
        groups.push_back("g" + std::to_string(rng() % 6));
    }
    const auto out = centroid_augment(named(m), groups);
    for (std::size_t r = 0; r < 40; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            double sum = 0.0;
            int n = 0;
            for (std::size_t q = 0; q < 40; ++q)
                if (groups[q] == groups[r]) {
                    sum += m(q, c);
                    ++n;
                }
            CHECK(out.values(r, 5 + c) == doctest::Approx(sum / n).epsilon(1e-12));
            for (std::size_t q = 0; q < 40; ++q)
                if (groups[q] == groups[r]) CHECK(out.values(q, 5 + c) == out.values(r, 5 + c));
        }
    }
}

TEST_CASE("a stored centroid table takes precedence for known groups") {
    const Matrix m = from_columns({{1, 3}});
    CentroidTable table{{"g", {100.0}}};
    const std::vector<std::string> groups{"g", "new"};
    const auto out = centroid_augment(named(m), groups, table);
    CHECK(out.values(0, 1) == 100.0);
    CHECK(out.values(1, 1) == 3.0);
}

TEST_CASE("ANOVA edge cases") {
    const std::vector<std::string> labels{"a", "a", "b", "b"};
    const Matrix same = from_columns({{1, 3, 1, 3}});
    CHECK(anova_f_rank(same, labels)[0].f_value == 0.0);
    const Matrix separated = from_columns({{1, 1, 3, 3}});
    CHECK(anova_f_rank(separated, labels)[0].f_value == std::numeric_limits<double>::infinity());
    const Matrix flat = from_columns({{2, 2, 2, 2}});
    CHECK(anova_f_rank(flat, labels)[0].f_value == 0.0);

    const std::vector<std::string> one_class{"a", "a", "a", "a"};
    CHECK_THROWS_AS(anova_f_rank(same, one_class), DataError);
    const std::vector<std::string> singleton{"a", "a", "a", "b"};
    CHECK_THROWS_AS(anova_f_rank(same, singleton), DataError);
}

TEST_CASE("ANOVA matches the sum-of-squares oracle and ranks descending") {
    std::mt19937_64 rng(50);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 90, d = 8;
    Matrix m(n, d);
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < n; ++r) {
        const int cls = static_cast<int>(r % 3);
        labels.push_back(std::string(1, static_cast<char>('x' + cls)));
        for (std::size_t c = 0; c < d; ++c) m(r, c) = g(rng) + 0.3 * static_cast<double>(c) * cls;
    }
    const auto ranked = anova_f_rank(m, labels);
    REQUIRE(ranked.size() == d);
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(ranked[i].f_value == doctest::Approx(oracle::anova_f(m.column(ranked[i].column), labels)).epsilon(1e-10));
        if (i > 0) CHECK(ranked[i - 1].f_value >= ranked[i].f_value);
    }
}

TEST_CASE("ANOVA ties keep column order") {
    const Matrix m = from_columns({{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}});
    const std::vector<std::string> labels{"a", "a", "b", "b"};
    const auto ranked = anova_f_rank(m, labels);
    CHECK(ranked[0].column == 0);
    CHECK(ranked[1].column == 1);
    CHECK(ranked[2].column == 2);
}
