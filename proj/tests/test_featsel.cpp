#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "cogload/error.hpp"
#include "cogload/featsel.hpp"

using namespace cogload;

namespace {

// Sum-of-squares from the definitions, grouping by explicit loops.
double brute_force_f(const std::vector<double>& x, const std::vector<int>& g) {
  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < x.size(); ++i) groups[g[i]].push_back(x[i]);
  double grand = 0.0;
  for (double v : x) grand += v;
  grand /= static_cast<double>(x.size());
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& [label, vals] : groups) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    ssb += static_cast<double>(vals.size()) * (mean - grand) * (mean - grand);
    for (double v : vals) ssw += (v - mean) * (v - mean);
  }
  const double k = static_cast<double>(groups.size());
  const double n = static_cast<double>(x.size());
  return (ssb / (k - 1)) / (ssw / (n - k));
}

FeatureMatrix fixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  FeatureMatrix m;
  m.feature_names = {"noise_a", "separated", "noise_b"};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 3);
    m.values.push_back(nd(gen));
    m.values.push_back(10.0 * c + 0.01 * nd(gen));
    m.values.push_back(nd(gen));
    m.labels.push_back(class_from_index(c));
  }
  m.n_rows = n;
  return m;
}

}  // namespace

TEST(Anova, WorkedFixtureIsExactlySixteen) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const std::vector<int> g{0, 0, 1, 1, 2, 2};
  const auto f = anova_f(x, g);
  EXPECT_FALSE(f.infinite);
  EXPECT_EQ(f.value, 16.0);
}

TEST(Anova, EqualMeansGiveZero) {
  const std::vector<double> x{1, 3, 2, 2, 0, 4};
  const std::vector<int> g{0, 0, 1, 1, 2, 2};
  EXPECT_EQ(anova_f(x, g).value, 0.0);
}

TEST(Anova, PerfectSeparationIsInfinite) {
  const std::vector<double> x{0, 0, 1, 1};
  const std::vector<int> g{0, 0, 1, 1};
  EXPECT_TRUE(anova_f(x, g).infinite);
}

TEST(Anova, DegenerateGroups) {
  const std::vector<double> x{1, 2, 3};
  const std::vector<int> one{0, 0, 0};
  const std::vector<int> singletons{0, 1, 2};
  EXPECT_THROW(anova_f(x, one), Error);
  EXPECT_THROW(anova_f(x, singletons), Error);
}

TEST(Anova, MatchesBruteForceAndInvariances) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + gen() % 3;
    const std::size_t n = k + 1 + gen() % 15;
    std::vector<double> x(n);
    std::vector<int> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<int>(i < k ? i : gen() % k);
      x[i] = nd(gen) + 0.5 * g[i];
    }
    const double oracle = brute_force_f(x, g);
    const auto f = anova_f(x, g);
    ASSERT_FALSE(f.infinite);
    EXPECT_NEAR(f.value, oracle, 1e-10 * std::abs(oracle));

    std::vector<double> shifted(x), scaled(x);
    std::vector<int> permuted(g);
    for (std::size_t i = 0; i < n; ++i) {
      shifted[i] += 17.25;
      scaled[i] *= -3.5;
      permuted[i] = static_cast<int>((g[i] + 1) % k);
    }
    EXPECT_NEAR(anova_f(shifted, g).value, oracle, 1e-8 * oracle);
    EXPECT_NEAR(anova_f(scaled, g).value, oracle, 1e-10 * oracle);
    EXPECT_NEAR(anova_f(x, permuted).value, oracle, 1e-10 * oracle);
  }
}

TEST(Ranking, SeparatedColumnFirstAndTopK) {
  const auto m = fixture(60, 4);
  const auto r = rank_features(m);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.entries[0].feature, "separated");
  EXPECT_EQ(select_top_k(r, 1), std::vector<std::string>{"separated"});
  const auto all = select_top_k(r, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(all[i], r.entries[i].feature);
  EXPECT_THROW(select_top_k(r, 0), Error);
  EXPECT_THROW(select_top_k(r, 4), Error);
}

TEST(Ranking, TiesAreAlphabetical) {
  FeatureMatrix m;
  m.feature_names = {"zeta", "alpha", "mid"};
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 3; ++j) m.values.push_back(static_cast<double>(i * i % 7));
    m.labels.push_back(class_from_index(i % 3));
  }
  m.n_rows = 9;
  const auto r = rank_features(m);
  EXPECT_EQ(r.entries[0].feature, "alpha");
  EXPECT_EQ(r.entries[1].feature, "mid");
  EXPECT_EQ(r.entries[2].feature, "zeta");
}

TEST(Ranking, InfiniteSortsFirstAndSingleClassFails) {
  FeatureMatrix m;
  m.feature_names = {"a_finite", "b_perfect"};
  m.values = {0.0, 1.0, 1.0, 1.0, 5.0, 2.0, 6.0, 2.0};
  m.labels = {CognitiveClass::zero_back, CognitiveClass::zero_back, CognitiveClass::one_back, CognitiveClass::one_back};
  m.n_rows = 4;
  const auto r = rank_features(m);
  EXPECT_EQ(r.entries[0].feature, "b_perfect");
  EXPECT_TRUE(r.entries[0].f.infinite);
  EXPECT_NE(ranking_csv(r).find("b_perfect,inf"), std::string::npos);

  m.labels.assign(4, CognitiveClass::two_back);
  try {
    rank_features(m);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_groups);
  }
}

TEST(Correlation, Examples) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_DOUBLE_EQ(pearson(x, std::vector<double>{6, 4, 2}), -1.0);
  EXPECT_DOUBLE_EQ(pearson(x, std::vector<double>{5, 7, 9}), 1.0);
  EXPECT_EQ(pearson(x, std::vector<double>{4, 4, 4}), 0.0);
}

TEST(Correlation, MatrixSymmetricWithUnitDiagonal) {
  auto m = fixture(40, 9);
  m.feature_names.push_back("constant");
  std::vector<double> widened;
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t j = 0; j < 3; ++j) widened.push_back(m.values[r * 3 + j]);
    widened.push_back(2.0);
  }
  m.values = widened;
  const auto c = correlation_matrix(m);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c.at(i, i), 1.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      EXPECT_NEAR(c.at(i, j), c.at(j, i), 1e-12);
      EXPECT_LE(std::abs(c.at(i, j)), 1.0);
    }
  }
  EXPECT_EQ(c.at(3, 0), 0.0);
}
