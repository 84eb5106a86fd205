#include "cogload/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "cogload/csv.hpp"
#include "cogload/error.hpp"

namespace cogload::metrics {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void check_class(int c) {
  if (c < 0 || c >= kNumClasses) fail(ErrorCode::invalid_class, "class " + std::to_string(c));
}

}  // namespace

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) fail(ErrorCode::length_mismatch, "truth and predictions differ in length");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_class(truth[i]);
    check_class(predicted[i]);
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return c;
}

std::size_t total(const Confusion& c) {
  std::size_t n = 0;
  for (const auto& row : c) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

double accuracy(const Confusion& c) {
  std::size_t diag = 0;
  for (std::size_t k = 0; k < c.size(); ++k) diag += c[k][k];
  return ratio(static_cast<double>(diag), static_cast<double>(total(c)));
}

Prf1 prf1(const Confusion& c) {
  Prf1 out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double tp = static_cast<double>(c[k][k]);
    double predicted = 0.0, actual = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      predicted += static_cast<double>(c[j][k]);
      actual += static_cast<double>(c[k][j]);
    }
    auto& s = out.per_class[k];
    s.precision = ratio(tp, predicted);
    s.recall = ratio(tp, actual);
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    out.precision += s.precision;
    out.recall += s.recall;
    out.f1 += s.f1;
  }
  const double k = static_cast<double>(c.size());
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

double binary_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) fail(ErrorCode::length_mismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Rank sums are kept doubled so tied (half-integer) ranks stay integral.
  std::size_t n_pos = 0;
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t twice_avg_rank = (i + 1) + j;  // ranks i+1 .. j
    for (std::size_t m = i; m < j; ++m) {
      if (positive[order[m]]) {
        ++n_pos;
        twice_rank_sum += twice_avg_rank;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return -1.0;
  const std::size_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AucResult roc_auc_ovr(std::span<const int> truth, std::span<const double> probabilities) {
  const std::size_t n = truth.size();
  if (probabilities.size() != n * kNumClasses) fail(ErrorCode::length_mismatch, "probability rows do not match labels");
  for (int t : truth) check_class(t);
  AucResult r;
  std::vector<double> scores(n);
  auto pos = std::make_unique<bool[]>(n);
  std::size_t used = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probabilities[i * kNumClasses + k];
      pos[i] = truth[i] == static_cast<int>(k);
    }
    const double auc = binary_auc(scores, std::span<const bool>(pos.get(), n));
    if (auc >= 0.0) {
      r.per_class[k] = auc;
      r.defined[k] = true;
      r.macro += auc;
      ++used;
    }
  }
  if (used == 0) fail(ErrorCode::undefined_auc, "no class has both positive and negative samples");
  r.macro /= static_cast<double>(used);
  return r;
}

double roc_auc_ovr_macro(std::span<const int> truth, std::span<const double> probabilities) {
  return roc_auc_ovr(truth, probabilities).macro;
}

EvalReport evaluate(std::string model, std::span<const int> truth, std::span<const int> predicted,
                    std::span<const double> probabilities) {
  EvalReport r;
  r.model = std::move(model);
  r.confusion = confusion_matrix(truth, predicted);
  r.accuracy = accuracy(r.confusion);
  const auto p = prf1(r.confusion);
  r.precision = p.precision;
  r.recall = p.recall;
  r.f1 = p.f1;
  r.per_class = p.per_class;
  r.auc = roc_auc_ovr_macro(truth, probabilities);
  return r;
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::string out = "Model,Accuracy,F1-score,Precision,Recall,AUC\n";
  for (const auto& r : reports) {
    out += r.model + "," + format_double(r.accuracy) + "," + format_double(r.f1) + "," + format_double(r.precision) +
           "," + format_double(r.recall) + "," + format_double(r.auc) + "\n";
  }
  return out;
}

std::string confusion_csv(const Confusion& c) {
  std::string out = "true\\predicted";
  for (int k = 0; k < kNumClasses; ++k) out += "," + std::string(to_string(class_from_index(k)));
  out += '\n';
  for (int t = 0; t < kNumClasses; ++t) {
    out += std::string(to_string(class_from_index(t)));
    for (int p = 0; p < kNumClasses; ++p) out += "," + std::to_string(c[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    out += '\n';
  }
  return out;
}

}  // namespace cogload::metrics
