#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload::baselines {

// Row-major samples with integer class labels in [0, n_classes).
struct FlatDataset {
  std::size_t dim = 0;
  std::size_t n_classes = kNumClasses;
  std::vector<double> features;  // n x dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  void add(std::span<const double> x, int label);
};

// Each window flattened time-major (T * n_features).
FlatDataset flatten(const WindowedDataset& ds);

struct GaussianNb {
  std::size_t dim = 0;
  std::vector<double> log_prior;  // per class
  std::vector<double> mean;       // class x dim
  std::vector<double> var;        // class x dim, floored
};

inline constexpr double kNbVarianceFloor = 1e-9;

GaussianNb gaussian_nb_fit(const FlatDataset& train, double var_floor = kNbVarianceFloor);
std::vector<double> gaussian_nb_predict_proba(const GaussianNb& m, std::span<const double> x);

struct NearestCentroid {
  std::size_t dim = 0;
  std::vector<double> centroids;  // class x dim
};

NearestCentroid nearest_centroid_fit(const FlatDataset& train);
int nearest_centroid_predict(const NearestCentroid& m, std::span<const double> x);
// Inverse Euclidean distances normalised to sum to 1 (used as AUC scores).
std::vector<double> nearest_centroid_scores(const NearestCentroid& m, std::span<const double> x);

// Majority vote of the k nearest (Euclidean) training points. Distance ties go
// to the lower training index; vote ties to the lower class.
int knn_predict(const FlatDataset& train, std::span<const double> x, std::size_t k);
// Vote shares among the k neighbours (used as AUC scores).
std::vector<double> knn_predict_proba(const FlatDataset& train, std::span<const double> x, std::size_t k);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] > threshold
  int label = 0;
  std::vector<double> class_share;  // training class proportions at the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t depth() const;
};

// CART with Gini impurity. Candidate thresholds are midpoints of sorted
// unique values; ties go to the lowest feature index, then lowest threshold.
DecisionTree decision_tree_fit(const FlatDataset& train, std::size_t max_depth, std::size_t min_leaf);
int decision_tree_predict(const DecisionTree& t, std::span<const double> x);
std::vector<double> decision_tree_predict_proba(const DecisionTree& t, std::span<const double> x);

}  // namespace cogload::baselines
