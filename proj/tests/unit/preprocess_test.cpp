#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "plcguard/forest.hpp"
#include "plcguard/preprocess.hpp"
#include "plcguard/rng.hpp"

using namespace plcguard;
using namespace plcguard::preprocess;

namespace {

FeatureVector fv(std::initializer_list<std::pair<std::size_t, double>> values) {
  FeatureVector v;
  for (auto [i, x] : values) v.values[i] = x;
  return v;
}

DenseMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
  DenseMatrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(MinMax, BoundsPerColumn) {
  const std::vector<FeatureVector> rows{fv({{0, 2}, {1, 5}}), fv({{0, 4}, {1, 5}}), fv({{0, 6}, {1, 5}})};
  const auto b = fit_minmax(rows);
  EXPECT_EQ(b.bounds.size(), 14u);
  EXPECT_EQ(b.bounds[0].min, 2);
  EXPECT_EQ(b.bounds[0].max, 6);
  EXPECT_EQ(b.bounds[1].min, 5);
  EXPECT_EQ(b.bounds[1].max, 5);
}

TEST(MinMax, EmptyThrows) { EXPECT_THROW(fit_minmax(std::span<const FeatureVector>{}), std::invalid_argument); }

TEST(MinMax, EndpointsClipAndConstantColumns) {
  const std::vector<FeatureVector> rows{fv({{0, 2}, {1, 5}}), fv({{0, 6}, {1, 5}})};
  const auto b = fit_minmax(rows);
  EXPECT_EQ(apply_minmax(fv({{0, 2}}), b)[0], 0.0);
  EXPECT_EQ(apply_minmax(fv({{0, 6}}), b)[0], 1.0);
  EXPECT_EQ(apply_minmax(fv({{0, 60}}), b)[0], 1.0);
  EXPECT_EQ(apply_minmax(fv({{0, -3}}), b)[0], 0.0);
  EXPECT_EQ(apply_minmax(fv({{1, 123}}), b)[1], 0.0);
}

TEST(MinMaxProperty, FitDataMapsIntoUnitCubeWithEndpoints) {
  SplitRng rng(3);
  std::vector<FeatureVector> rows(200);
  for (auto& r : rows)
    for (auto& x : r.values) x = uniform_real(rng, -50, 900);
  const auto b = fit_minmax(rows);
  const auto m = apply_minmax(rows, b);
  for (std::size_t c = 0; c < 14; ++c) {
    double lo = 1, hi = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
  }
}

TEST(Pca, RankOneData) {
  SplitRng rng(5);
  std::vector<double> dir(14);
  for (auto& d : dir) d = uniform_real(rng, -1, 1);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) {
    const double t = uniform_real(rng, -3, 3);
    std::vector<double> r(14);
    for (int j = 0; j < 14; ++j) r[j] = 0.5 + t * dir[j];
    rows.push_back(r);
  }
  const auto m = fit_pca(to_matrix(rows));
  EXPECT_NEAR(m.explained_variance_ratio[0], 1.0, 1e-9);
  EXPECT_NEAR(m.explained_variance_ratio[1], 0.0, 1e-9);
}

TEST(Pca, IsotropicPlaneSplitsVarianceEvenly) {
  SplitRng rng(6);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5000; ++i) {
    std::vector<double> r(14, 0.0);
    r[2] = standard_normal(rng);
    r[9] = standard_normal(rng);
    rows.push_back(r);
  }
  const auto m = fit_pca(to_matrix(rows));
  EXPECT_NEAR(m.explained_variance_ratio[0], 0.5, 0.05);
  EXPECT_NEAR(m.explained_variance_ratio[1], 0.5, 0.05);
}

TEST(Pca, TooFewRowsThrows) {
  EXPECT_THROW(fit_pca(to_matrix({{1, 2, 3}, {2, 3, 4}})), std::invalid_argument);
}

TEST(Pca, ProjectionBasics) {
  SplitRng rng(7);
  std::vector<std::vector<double>> rows(100, std::vector<double>(14));
  for (auto& r : rows)
    for (int j = 0; j < 14; ++j) r[j] = uniform01(rng) * (j + 1);
  const auto m = fit_pca(to_matrix(rows));
  const auto at_mean = project(m.mean, m);
  EXPECT_NEAR(at_mean[0], 0.0, 1e-12);
  EXPECT_NEAR(at_mean[1], 0.0, 1e-12);
  std::vector<double> v = m.mean;
  for (int j = 0; j < 14; ++j) v[j] += m.components[0][j];
  const auto p = project(v, m);
  EXPECT_NEAR(p[0], 1.0, 1e-9);
  EXPECT_NEAR(p[1], 0.0, 1e-9);
  EXPECT_THROW(project(std::vector<double>(3, 0.0), m), std::invalid_argument);
}

TEST(PcaProperty, MatchesJacobiOracle) {
  SplitRng rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 20, 200));
    std::vector<std::vector<double>> rows(n, std::vector<double>(14));
    for (auto& r : rows) {
      const double a = standard_normal(rng), b = standard_normal(rng);
      for (int j = 0; j < 14; ++j) r[j] = a * (j % 3) + b * std::sin(j) + 0.1 * standard_normal(rng);
    }
    const auto m = fit_pca(to_matrix(rows));
    const auto e = oracle::jacobi(oracle::covariance(rows));
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(m.eigenvalues[c], e.values[c], 1e-6 * std::max(1.0, e.values[c]));
      const double cosine = dot(m.components[c], e.vectors[c]);
      EXPECT_NEAR(std::abs(cosine), 1.0, 1e-6);
      // sign convention: largest-magnitude loading is positive
      std::size_t arg = 0;
      for (std::size_t j = 1; j < 14; ++j)
        if (std::abs(m.components[c][j]) > std::abs(m.components[c][arg])) arg = j;
      EXPECT_GT(m.components[c][arg], 0.0);
    }
    EXPECT_NEAR(dot(m.components[0], m.components[1]), 0.0, 1e-9);
    EXPECT_NEAR(dot(m.components[0], m.components[0]), 1.0, 1e-9);
    EXPECT_GE(m.explained_variance_ratio[0], m.explained_variance_ratio[1]);

    // projection variance equals eigenvalue
    for (int c = 0; c < 2; ++c) {
      double s = 0, ss = 0;
      for (const auto& r : rows) {
        const double p = project(r, m)[c];
        s += p;
        ss += p * p;
      }
      const double var = (ss - s * s / double(n)) / double(n - 1);
      EXPECT_NEAR(var, m.eigenvalues[c], 1e-6 * m.eigenvalues[c]);
    }
  }
}

TEST(Correlation, DuplicateAndAnticorrelatedColumnsDropped) {
  SplitRng rng(2);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 500; ++i) {
    const double a = uniform01(rng), b = uniform01(rng), c = uniform01(rng);
    rows.push_back({a, b, a, -b + 0.05 * uniform01(rng), c});
  }
  const auto m = to_matrix(rows);
  EXPECT_LT(pearson(m, 1, 3), -0.95);
  EXPECT_EQ(fit_correlation_filter(m), (std::vector<std::size_t>{0, 1, 4}));
}

TEST(Correlation, IndependentColumnsAllKept) {
  SplitRng rng(3);
  DenseMatrix m(10000, 14);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < 14; ++c) m(r, c) = uniform01(rng);
  EXPECT_EQ(fit_correlation_filter(m).size(), 14u);
}

TEST(Correlation, ConstantColumnHasZeroCorrelation) {
  const auto m = to_matrix({{1, 5}, {2, 5}, {3, 5}});
  EXPECT_EQ(pearson(m, 0, 1), 0.0);
}

TEST(Rfe, PlantedSignalSelectsInformativeColumns) {
  SplitRng rng(17);
  const std::array<Label, 3> classes{Label::Ex1, Label::Ex3, Label::Ex7};
  DenseMatrix m;
  std::vector<Label> labels;
  for (int i = 0; i < 900; ++i) {
    const auto cls = uniform_index(rng, 3);
    std::vector<double> row(10);
    for (int j = 0; j < 5; ++j) row[j] = double(cls) * (1.0 + j) + 0.3 * standard_normal(rng);  // informative
    for (int j = 5; j < 10; ++j) row[j] = standard_normal(rng);                                // noise
    m.append_row(row);
    labels.push_back(classes[cls]);
  }
  detect::ForestConfig fc;
  fc.n_trees = 40;
  fc.seed = 4;
  const auto r = run_rfe(m, labels, fc);
  ASSERT_FALSE(r.selected.empty());
  for (auto c : r.selected) {
    EXPECT_LT(c, 5u);
  }
  EXPECT_GE(r.selected_accuracy, r.trace.front().validation_accuracy);
  // bookkeeping: sizes drop by one each step, returned accuracy is the trace maximum
  ASSERT_EQ(r.trace.size(), 10u);
  double best = 0;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    EXPECT_EQ(r.trace[i].columns.size(), 10 - i);
    best = std::max(best, r.trace[i].validation_accuracy);
  }
  EXPECT_EQ(r.selected_accuracy, best);
}

TEST(Rfe, TwoFeaturesGiveTwoSteps) {
  SplitRng rng(1);
  DenseMatrix m;
  std::vector<Label> labels;
  for (int i = 0; i < 200; ++i) {
    const bool a = i % 2;
    m.append_row(std::vector<double>{a ? 1.0 + uniform01(rng) : uniform01(rng), uniform01(rng)});
    labels.push_back(a ? Label::Ex2 : Label::Ex6);
  }
  detect::ForestConfig fc;
  fc.n_trees = 20;
  EXPECT_EQ(run_rfe(m, labels, fc).trace.size(), 2u);
}

TEST(Rfe, SingleClassThrows) {
  DenseMatrix m;
  std::vector<Label> labels;
  for (int i = 0; i < 20; ++i) {
    m.append_row(std::vector<double>{double(i), 1.0});
    labels.push_back(Label::Ex7);
  }
  detect::ForestConfig fc;
  fc.n_trees = 5;
  EXPECT_THROW(run_rfe(m, labels, fc), std::invalid_argument);
}

TEST(StratifiedSplit, KeepsClassProportionsAndIsDeterministic) {
  std::vector<Label> labels;
  for (int i = 0; i < 400; ++i) labels.push_back(i % 4 == 0 ? Label::Ex1 : Label::Ex4);
  const auto [tr, va] = stratified_split(labels, 0.75, 9);
  EXPECT_EQ(tr.size() + va.size(), 400u);
  std::size_t ex1 = 0;
  for (auto i : va) ex1 += labels[i] == Label::Ex1;
  EXPECT_EQ(ex1, 25u);
  EXPECT_EQ(stratified_split(labels, 0.75, 9), stratified_split(labels, 0.75, 9));
}
