#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload {

// One-way ANOVA F statistic. `infinite` is set for perfect separation
// (zero within-group variance with nonzero between-group variance).
struct FStat {
  double value = 0.0;
  bool infinite = false;

  // Orders infinite above every finite value.
  friend bool operator>(const FStat& a, const FStat& b) {
    if (a.infinite != b.infinite) return a.infinite;
    return !a.infinite && a.value > b.value;
  }
  friend bool operator==(const FStat& a, const FStat& b) {
    return a.infinite == b.infinite && (a.infinite || a.value == b.value);
  }
};

// Groups are the label values present; labels are arbitrary integers.
FStat anova_f(std::span<const double> values, std::span<const int> labels);
FStat anova_f(std::span<const double> values, std::span<const CognitiveClass> labels);

struct RankEntry {
  std::string feature;
  FStat f;
};

struct FeatureRanking {
  std::vector<RankEntry> entries;  // descending F, ties by ascending name

  std::size_t size() const { return entries.size(); }
};

// Rows without a task class are ignored.
FeatureRanking rank_features(const FeatureMatrix& m);
std::vector<std::string> select_top_k(const FeatureRanking& r, std::size_t k);

struct CorrelationMap {
  std::vector<std::string> names;
  std::vector<double> matrix;  // n x n row-major

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return matrix[i * names.size() + j]; }
};

double pearson(std::span<const double> x, std::span<const double> y);
CorrelationMap correlation_matrix(const FeatureMatrix& m);

std::string ranking_csv(const FeatureRanking& r);
std::string correlation_csv(const CorrelationMap& c);

}  // namespace cogload
