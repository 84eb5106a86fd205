#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "cogload/datagen.hpp"
#include "cogload/signal_core.hpp"

namespace cogload {

inline constexpr int kConfigSchemaVersion = 1;

enum class ModalitySet { simulator_only, fused_all };

std::string_view to_string(ModalitySet m);

struct ModelHyper {
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t kernel = 3;
  std::size_t lstm_hidden = 64;
  std::size_t lstm_layers = 2;
  std::size_t fc1 = 64;
  std::size_t fc2 = 128;
  bool peephole = true;
  bool pooling = false;
};

struct BaselineHyper {
  std::size_t knn_k = 5;
  std::size_t tree_max_depth = 12;
  std::size_t tree_min_leaf = 1;
  double nb_var_floor = 1e-9;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 42;
  ModalitySet modality = ModalitySet::fused_all;
  std::string data_source = "synthetic";  // "synthetic" or "files"
  std::string data_path;
  std::string preset = "separable";
  datagen::GenConfig synthetic = datagen::preset("separable");
  MbllGeometry geometry = example_geometry();
  std::optional<double> fused_rate_hz;  // empty: the fNIRS rate
  DownsampleMethod downsample = DownsampleMethod::mean;
  std::size_t window_len = 10;
  std::size_t window_stride = 5;
  std::size_t top_k = 20;
  double test_fraction = 0.2;
  ModelHyper model;
  BaselineHyper baselines;
};

// Unknown keys anywhere in the document are rejected with the dotted key path
// in the message. Omitted keys keep their defaults; `synthetic.preset` is
// applied before the other synthetic overrides.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& c);

}  // namespace cogload
