#include "cogload/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include "cogload/error.hpp"

namespace cogload::baselines {

void FlatDataset::add(std::span<const double> x, int label) {
  if (x.size() != dim) fail(ErrorCode::dimension_mismatch, "sample dimension " + std::to_string(x.size()));
  if (label < 0 || static_cast<std::size_t>(label) >= n_classes) fail(ErrorCode::invalid_class, std::to_string(label));
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

FlatDataset flatten(const WindowedDataset& ds) {
  FlatDataset out;
  out.dim = ds.window_len * ds.n_features;
  for (const auto& w : ds.windows) out.add(w.values, index_of(w.label));
  return out;
}

namespace {

std::vector<std::size_t> class_counts(const FlatDataset& d) {
  std::vector<std::size_t> counts(d.n_classes, 0);
  for (int y : d.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void require_all_classes(const FlatDataset& d) {
  const auto counts = class_counts(d);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) fail(ErrorCode::missing_class, "class " + std::to_string(k) + " has no training samples");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) fail(ErrorCode::dimension_mismatch, "expected " + std::to_string(expected) + " features, got " + std::to_string(got));
}

}  // namespace

GaussianNb gaussian_nb_fit(const FlatDataset& train, double var_floor) {
  require_all_classes(train);
  const std::size_t K = train.n_classes, D = train.dim;
  const auto counts = class_counts(train);
  GaussianNb m;
  m.dim = D;
  m.mean.assign(K * D, 0.0);
  m.var.assign(K * D, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = static_cast<std::size_t>(train.labels[i]);
    auto x = train.row(i);
    for (std::size_t j = 0; j < D; ++j) m.mean[k * D + j] += x[j];
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < D; ++j) m.mean[k * D + j] /= static_cast<double>(counts[k]);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = static_cast<std::size_t>(train.labels[i]);
    auto x = train.row(i);
    for (std::size_t j = 0; j < D; ++j) {
      const double d = x[j] - m.mean[k * D + j];
      m.var[k * D + j] += d * d;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < D; ++j) {
      auto& v = m.var[k * D + j];
      v = std::max(v / static_cast<double>(counts[k]), var_floor);
    }
    m.log_prior.push_back(std::log(static_cast<double>(counts[k]) / static_cast<double>(train.size())));
  }
  return m;
}

std::vector<double> gaussian_nb_predict_proba(const GaussianNb& m, std::span<const double> x) {
  check_dim(m.dim, x.size());
  const std::size_t K = m.log_prior.size(), D = m.dim;
  std::vector<double> logp(K);
  for (std::size_t k = 0; k < K; ++k) {
    double s = m.log_prior[k];
    for (std::size_t j = 0; j < D; ++j) {
      const double v = m.var[k * D + j];
      const double d = x[j] - m.mean[k * D + j];
      s += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
    }
    logp[k] = s;
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0.0;
  for (auto& v : logp) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : logp) v /= sum;
  return logp;
}

NearestCentroid nearest_centroid_fit(const FlatDataset& train) {
  require_all_classes(train);
  const auto counts = class_counts(train);
  NearestCentroid m;
  m.dim = train.dim;
  m.centroids.assign(train.n_classes * train.dim, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = static_cast<std::size_t>(train.labels[i]);
    auto x = train.row(i);
    for (std::size_t j = 0; j < train.dim; ++j) m.centroids[k * train.dim + j] += x[j];
  }
  for (std::size_t k = 0; k < train.n_classes; ++k) {
    for (std::size_t j = 0; j < train.dim; ++j) m.centroids[k * train.dim + j] /= static_cast<double>(counts[k]);
  }
  return m;
}

int nearest_centroid_predict(const NearestCentroid& m, std::span<const double> x) {
  check_dim(m.dim, x.size());
  const std::size_t K = m.centroids.size() / m.dim;
  int best = 0;
  double best_d = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double d = squared_distance(x, {m.centroids.data() + k * m.dim, m.dim});
    if (k == 0 || d < best_d) {
      best = static_cast<int>(k);
      best_d = d;
    }
  }
  return best;
}

std::vector<double> nearest_centroid_scores(const NearestCentroid& m, std::span<const double> x) {
  check_dim(m.dim, x.size());
  const std::size_t K = m.centroids.size() / m.dim;
  std::vector<double> s(K);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double d = std::sqrt(squared_distance(x, {m.centroids.data() + k * m.dim, m.dim}));
    s[k] = 1.0 / (d + 1e-12);
    sum += s[k];
  }
  for (auto& v : s) v /= sum;
  return s;
}

std::vector<double> knn_predict_proba(const FlatDataset& train, std::span<const double> x, std::size_t k) {
  if (k < 1 || k > train.size()) {
    fail(ErrorCode::k_out_of_range, "k = " + std::to_string(k) + " with " + std::to_string(train.size()) + " training points");
  }
  check_dim(train.dim, x.size());
  std::vector<std::pair<double, std::size_t>> dist(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) dist[i] = {squared_distance(x, train.row(i)), i};
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<double> votes(train.n_classes, 0.0);
  for (std::size_t i = 0; i < k; ++i) votes[static_cast<std::size_t>(train.labels[dist[i].second])] += 1.0;
  for (auto& v : votes) v /= static_cast<double>(k);
  return votes;
}

int knn_predict(const FlatDataset& train, std::span<const double> x, std::size_t k) {
  const auto votes = knn_predict_proba(train, x, k);
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

// ---------------------------------------------------------------------------

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    if (n < 0 || static_cast<std::size_t>(n) >= nodes.size()) continue;
    best = std::max(best, d);
    if (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      stack.push_back({nodes[static_cast<std::size_t>(n)].left, d + 1});
      stack.push_back({nodes[static_cast<std::size_t>(n)].right, d + 1});
    }
  }
  return best;
}

namespace {

double gini(std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 1.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s -= p * p;
  }
  return s;
}

struct TreeBuilder {
  const FlatDataset& data;
  std::size_t max_depth;
  std::size_t min_leaf;
  DecisionTree tree;

  int build(std::vector<std::size_t>& idx, std::size_t depth) {
    const std::size_t K = data.n_classes;
    std::vector<std::size_t> counts(K, 0);
    for (auto i : idx) ++counts[static_cast<std::size_t>(data.labels[i])];
    TreeNode node;
    node.label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (auto c : counts) node.class_share.push_back(idx.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(idx.size()));
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    const double parent = gini(counts, idx.size());
    if (depth >= max_depth || parent == 0.0 || idx.size() < 2 * min_leaf) return id;

    // Exhaustive scan. The best split is taken even without impurity gain
    // (XOR-like layouts need a neutral first split).
    double best_score = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> col(idx.size());
    std::vector<std::size_t> left(K);
    for (std::size_t f = 0; f < data.dim; ++f) {
      for (std::size_t i = 0; i < idx.size(); ++i) col[i] = {data.features[idx[i] * data.dim + f], data.labels[idx[i]]};
      std::sort(col.begin(), col.end());
      std::fill(left.begin(), left.end(), 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        const auto y = static_cast<std::size_t>(col[i].second);
        ++left[y];
        --right[y];
        if (col[i].first == col[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = col.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = gini(left, nl) * static_cast<double>(nl) + gini(right, nr) * static_cast<double>(nr);
        if (score < best_score - 1e-12) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (col[i].first + col[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) {
      (data.features[i * data.dim + static_cast<std::size_t>(best_feature)] <= best_threshold ? li : ri).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    auto& me = tree.nodes[static_cast<std::size_t>(id)];
    me.feature = best_feature;
    me.threshold = best_threshold;
    me.left = l;
    me.right = r;
    return id;
  }
};

const TreeNode& leaf_for(const DecisionTree& t, std::span<const double> x) {
  if (t.nodes.empty()) fail(ErrorCode::empty_dataset, "decision tree has no nodes");
  const TreeNode* n = &t.nodes[0];
  while (n->feature >= 0) {
    if (static_cast<std::size_t>(n->feature) >= x.size()) fail(ErrorCode::dimension_mismatch, "sample too short for tree");
    n = &t.nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
  }
  return *n;
}

}  // namespace

DecisionTree decision_tree_fit(const FlatDataset& train, std::size_t max_depth, std::size_t min_leaf) {
  if (train.size() == 0) fail(ErrorCode::empty_dataset, "decision tree needs at least one sample");
  TreeBuilder b{train, max_depth, std::max<std::size_t>(min_leaf, 1), {}};
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  b.build(idx, 0);
  return std::move(b.tree);
}

int decision_tree_predict(const DecisionTree& t, std::span<const double> x) { return leaf_for(t, x).label; }

std::vector<double> decision_tree_predict_proba(const DecisionTree& t, std::span<const double> x) {
  return leaf_for(t, x).class_share;
}

}  // namespace cogload::baselines
