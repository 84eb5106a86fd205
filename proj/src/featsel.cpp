#include "cogload/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cogload/csv.hpp"
#include "cogload/error.hpp"

namespace cogload {

FStat anova_f(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) fail(ErrorCode::length_mismatch, "values and labels differ in length");
  std::map<int, std::pair<double, std::size_t>> groups;  // label -> (sum, count)
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& g = groups[labels[i]];
    g.first += values[i];
    ++g.second;
    total += values[i];
  }
  const std::size_t k = groups.size();
  const std::size_t n = values.size();
  if (k < 2 || n <= k) {
    fail(ErrorCode::degenerate_groups, std::to_string(k) + " groups over " + std::to_string(n) + " samples");
  }
  const double grand = total / static_cast<double>(n);
  std::map<int, double> means;
  double ssb = 0.0;
  for (const auto& [label, g] : groups) {
    const double mean = g.first / static_cast<double>(g.second);
    means[label] = mean;
    ssb += static_cast<double>(g.second) * (mean - grand) * (mean - grand);
  }
  double ssw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - means[labels[i]];
    ssw += d * d;
  }
  if (ssb == 0.0) return {0.0, false};
  if (ssw == 0.0) return {0.0, true};
  const double msb = ssb / static_cast<double>(k - 1);
  const double msw = ssw / static_cast<double>(n - k);
  return {msb / msw, false};
}

FStat anova_f(std::span<const double> values, std::span<const CognitiveClass> labels) {
  std::vector<int> ints(labels.size());
  std::transform(labels.begin(), labels.end(), ints.begin(), [](CognitiveClass c) { return index_of(c); });
  return anova_f(values, ints);
}

FeatureRanking rank_features(const FeatureMatrix& m) {
  m.check_shape();
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    if (m.labels[r]) {
      rows.push_back(r);
      labels.push_back(index_of(*m.labels[r]));
    }
  }
  FeatureRanking ranking;
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < m.n_features(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = m.at(rows[i], j);
    ranking.entries.push_back({m.feature_names[j], anova_f(col, labels)});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.f > b.f) return true;
    if (b.f > a.f) return false;
    return a.feature < b.feature;
  });
  return ranking;
}

std::vector<std::string> select_top_k(const FeatureRanking& r, std::size_t k) {
  if (k < 1 || k > r.size()) {
    fail(ErrorCode::k_out_of_range, "k = " + std::to_string(k) + " with " + std::to_string(r.size()) + " features");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(r.entries[i].feature);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::length_mismatch, "pearson inputs differ in length");
  if (x.size() < 2) fail(ErrorCode::empty_matrix, "pearson needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (std::sqrt(sxx / n) < kConstantStdEpsilon || std::sqrt(syy / n) < kConstantStdEpsilon) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMap correlation_matrix(const FeatureMatrix& m) {
  m.check_shape();
  if (m.n_rows < 2) fail(ErrorCode::empty_matrix, "correlation needs at least 2 rows");
  const std::size_t n = m.n_features();
  std::vector<std::vector<double>> cols(n);
  for (std::size_t j = 0; j < n; ++j) cols[j] = m.column(j);
  CorrelationMap c;
  c.names = m.feature_names;
  c.matrix.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    c.matrix[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = pearson(cols[i], cols[j]);
      c.matrix[i * n + j] = r;
      c.matrix[j * n + i] = r;
    }
  }
  return c;
}

std::string ranking_csv(const FeatureRanking& r) {
  std::string out = "rank,feature,f_statistic\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    out += std::to_string(i + 1) + "," + e.feature + "," + (e.f.infinite ? std::string("inf") : format_double(e.f.value)) + "\n";
  }
  return out;
}

std::string correlation_csv(const CorrelationMap& c) {
  std::string out = "feature";
  for (const auto& n : c.names) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += c.names[i];
    for (std::size_t j = 0; j < c.size(); ++j) out += "," + format_double(c.at(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace cogload
