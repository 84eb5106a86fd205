#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogload/config.hpp"
#include "cogload/datagen.hpp"
#include "cogload/featsel.hpp"
#include "cogload/metrics.hpp"
#include "cogload/nn.hpp"
#include "cogload/signal_core.hpp"

namespace cogload {

struct SubjectRecording {
  std::string subject;  // "subject_01"
  Recording recording;  // fNIRS channels as optical densities
};

// Directory layout: <dir>/subject_NN/{simulator,fnirs,eye,labels,trials}.csv
void write_session(const std::filesystem::path& dir, const datagen::Session& s);
std::vector<std::filesystem::path> synth_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
std::vector<SubjectRecording> generate_subjects(const ExperimentConfig& cfg);
std::vector<SubjectRecording> load_subjects(const std::filesystem::path& data_dir);

// Replaces every `<base>_780` / `<base>_850` OD pair by `<base>_hbo` / `<base>_hbr`.
Recording convert_fnirs(const Recording& rec, const MbllGeometry& g);

struct WindowRef {
  std::size_t subject = 0;
  std::size_t start_row = 0;
  CognitiveClass label = CognitiveClass::zero_back;
  bool test = false;
};

struct PreparedData {
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::vector<std::string> subjects;
  // Every candidate column, scaled with training-row statistics.
  std::vector<FeatureMatrix> matrices;
  std::vector<std::string> simulator_features;
  std::vector<std::string> fnirs_features;
  std::vector<std::string> eye_features;
  std::vector<std::string> model_features;  // columns the classifiers see
  ScalerParams scaler;                       // over all candidate columns
  std::vector<WindowRef> windows;

  std::string manifest_csv() const;
  std::uint64_t fingerprint() const;

  // Training rows only, restricted to the given columns.
  FeatureMatrix training_rows(std::span<const std::string> columns) const;
  WindowedDataset dataset(bool test) const;  // model_features only
};

std::vector<std::string> model_columns(const PreparedData& p, ModalitySet modality,
                                       std::span<const std::string> fnirs_selected);

// MBLL, fusion at the configured rate, windowing, stratified split, fNIRS
// ranking on training rows, and scaling fitted on training rows.
PreparedData prepare(const std::vector<SubjectRecording>& subjects, const ExperimentConfig& cfg);

// Throws when any non-constant training column violates |mean| < 1e-9 or |std - 1| < 1e-6.
void check_scaled(const PreparedData& p);

void write_prepared(const std::filesystem::path& dir, const PreparedData& p);
PreparedData read_prepared(const std::filesystem::path& dir);

// CNN-LSTM plus the four baselines on the identical test split, in report order:
// CNN-LSTM, Decision trees, k-NN, Naive Bayes, Nearest centroid.
std::vector<metrics::EvalReport> evaluate_models(const WindowedDataset& train, const WindowedDataset& test,
                                                 const nn::ModelParams& model, const BaselineHyper& hyper);

nn::ModelConfig model_config(const ModelHyper& hyper, std::size_t n_features, std::size_t window_len);
nn::TrainConfig train_config(const ModelHyper& hyper);

std::uint64_t fnv1a(std::string_view text);

}  // namespace cogload
