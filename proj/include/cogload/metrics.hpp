#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload::metrics {

// counts[true][predicted]
using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted);
std::size_t total(const Confusion& c);
double accuracy(const Confusion& c);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Prf1 {
  double precision = 0.0;  // macro averages
  double recall = 0.0;
  double f1 = 0.0;
  std::array<ClassScores, kNumClasses> per_class{};
};

// 0/0 ratios are defined as 0.
Prf1 prf1(const Confusion& c);

// Binary AUC by the Mann-Whitney rank statistic, ties counted 1/2.
// Returns a negative value when either class is absent.
double binary_auc(std::span<const double> scores, std::span<const bool> positive);

struct AucResult {
  double macro = 0.0;
  std::array<double, kNumClasses> per_class{};
  std::array<bool, kNumClasses> defined{};
};

// One-vs-rest AUC averaged over the classes that have both positives and negatives.
AucResult roc_auc_ovr(std::span<const int> truth, std::span<const double> probabilities);
double roc_auc_ovr_macro(std::span<const int> truth, std::span<const double> probabilities);

struct EvalReport {
  std::string model;
  Confusion confusion{};
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  std::array<ClassScores, kNumClasses> per_class{};
};

EvalReport evaluate(std::string model, std::span<const int> truth, std::span<const int> predicted,
                    std::span<const double> probabilities);

// Columns: Model,Accuracy,F1-score,Precision,Recall,AUC
std::string report_csv(std::span<const EvalReport> reports);
std::string confusion_csv(const Confusion& c);

}  // namespace cogload::metrics
