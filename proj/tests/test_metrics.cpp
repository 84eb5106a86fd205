#include <gtest/gtest.h>

#include <random>

#include "cogload/error.hpp"
#include "cogload/metrics.hpp"

using namespace cogload;
using namespace cogload::metrics;

namespace {

// Fraction of (positive, negative) pairs ranked correctly, ties counted 1/2.
double all_pairs_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

std::unique_ptr<bool[]> as_bools(const std::vector<bool>& v) {
  auto out = std::make_unique<bool[]>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace

TEST(Confusion, Examples) {
  const std::vector<int> t{0, 1, 2, 2, 1, 0};
  EXPECT_EQ(confusion_matrix(t, t), (Confusion{{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}}));
  const std::vector<int> zeros(6, 0);
  EXPECT_EQ(confusion_matrix(t, zeros), (Confusion{{{2, 0, 0}, {2, 0, 0}, {2, 0, 0}}}));
  const std::vector<int> p{0, 2, 2, 1, 1, 1};
  const auto c = confusion_matrix(t, p);
  EXPECT_EQ(c, (Confusion{{{1, 1, 0}, {0, 1, 1}, {0, 1, 1}}}));
  EXPECT_EQ(total(c), 6u);
  const std::vector<int> short_p{0};
  EXPECT_THROW(confusion_matrix(t, short_p), Error);
}

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(Confusion{{{3, 0, 0}, {0, 4, 0}, {0, 0, 5}}}), 1.0);
  EXPECT_EQ(accuracy(Confusion{{{0, 2, 2}, {2, 0, 2}, {2, 2, 0}}}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(Confusion{{{30, 2, 1}, {3, 28, 2}, {3, 2, 29}}}), 0.87);
}

TEST(Prf1, HandFixture) {
  const Confusion c{{{5, 1, 0}, {2, 3, 1}, {0, 2, 6}}};
  const auto r = prf1(c);
  const double p0 = 5.0 / 7, p1 = 3.0 / 6, p2 = 6.0 / 7;
  const double r0 = 5.0 / 6, r1 = 3.0 / 6, r2 = 6.0 / 8;
  auto f = [](double p, double q) { return 2 * p * q / (p + q); };
  EXPECT_NEAR(r.per_class[0].precision, p0, 1e-15);
  EXPECT_NEAR(r.per_class[2].recall, r2, 1e-15);
  EXPECT_NEAR(r.precision, (p0 + p1 + p2) / 3, 1e-15);
  EXPECT_NEAR(r.recall, (r0 + r1 + r2) / 3, 1e-15);
  EXPECT_NEAR(r.f1, (f(p0, r0) + f(p1, r1) + f(p2, r2)) / 3, 1e-15);
}

TEST(Prf1, PerfectAndDegenerate) {
  const auto perfect = prf1(Confusion{{{3, 0, 0}, {0, 4, 0}, {0, 0, 5}}});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto absent = prf1(Confusion{{{3, 1, 0}, {0, 4, 0}, {0, 0, 0}}});
  EXPECT_EQ(absent.per_class[2].precision, 0.0);
  EXPECT_EQ(absent.per_class[2].recall, 0.0);
  EXPECT_EQ(absent.per_class[2].f1, 0.0);
}

TEST(Auc, Examples) {
  const std::vector<double> ordered{0.1, 0.2, 0.8, 0.9};
  const std::vector<bool> pos{false, false, true, true};
  EXPECT_EQ(binary_auc(ordered, std::span<const bool>(as_bools(pos).get(), 4)), 1.0);

  const std::vector<int> truth{0, 1, 2, 0, 1, 2};
  const std::vector<double> flat(18, 1.0 / 3);
  const auto r = roc_auc_ovr(truth, flat);
  for (double a : r.per_class) EXPECT_EQ(a, 0.5);

  const std::vector<double> s5{0.3, 0.7, 0.7, 0.2, 0.9};
  const std::vector<bool> p5{false, true, false, false, true};
  EXPECT_EQ(binary_auc(s5, std::span<const bool>(as_bools(p5).get(), 5)), all_pairs_auc(s5, p5));
  EXPECT_EQ(all_pairs_auc(s5, p5), 5.5 / 6.0);
}

TEST(Auc, MatchesAllPairsOracleExactly) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 19;
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 6) / 5.0;
      pos[i] = gen() % 2 == 0;
    }
    pos[0] = true;
    pos[1] = false;
    EXPECT_EQ(binary_auc(s, std::span<const bool>(as_bools(pos).get(), n)), all_pairs_auc(s, pos));
  }
}

TEST(Auc, UndefinedAndMonotoneInvariance) {
  const std::vector<int> all_zero{0, 0, 0};
  const std::vector<double> probs{1, 0, 0, 1, 0, 0, 1, 0, 0};
  EXPECT_THROW(roc_auc_ovr(all_zero, probs), Error);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ud(0.01, 1);
  std::vector<int> truth;
  std::vector<double> p, transformed;
  for (int i = 0; i < 30; ++i) {
    truth.push_back(i % 3);
    for (int k = 0; k < 3; ++k) {
      const double v = ud(gen);
      p.push_back(v);
      transformed.push_back(std::exp(3 * v) - 7);
    }
  }
  EXPECT_EQ(roc_auc_ovr_macro(truth, p), roc_auc_ovr_macro(truth, transformed));
}

TEST(Report, CsvColumnsAndPermutationInvariance) {
  const std::vector<int> t{0, 1, 2, 2, 1, 0, 1};
  const std::vector<int> p{0, 2, 2, 1, 1, 1, 1};
  std::vector<double> probs;
  for (int c : p) {
    for (int k = 0; k < 3; ++k) probs.push_back(k == c ? 0.8 : 0.1);
  }
  const auto r = evaluate("m", t, p, probs);
  const std::vector<EvalReport> reports{r};
  EXPECT_EQ(report_csv(reports).substr(0, 44), "Model,Accuracy,F1-score,Precision,Recall,AUC");

  auto perm = [](int c) { return (c + 1) % 3; };
  std::vector<int> t2, p2;
  std::vector<double> probs2(probs.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t2.push_back(perm(t[i]));
    p2.push_back(perm(p[i]));
    for (int k = 0; k < 3; ++k) probs2[i * 3 + static_cast<std::size_t>(perm(k))] = probs[i * 3 + static_cast<std::size_t>(k)];
  }
  const auto r2 = evaluate("m", t2, p2, probs2);
  EXPECT_DOUBLE_EQ(r.accuracy, r2.accuracy);
  EXPECT_NEAR(r.f1, r2.f1, 1e-15);
  EXPECT_NEAR(r.precision, r2.precision, 1e-15);
  EXPECT_NEAR(r.auc, r2.auc, 1e-15);
  for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.auc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
