#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload::nn {

// (batch, channels, time), row-major.
struct Tensor3 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t time = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t b, std::size_t c, std::size_t t) : batch(b), channels(c), time(t), data(b * c * t, 0.0) {}

  double& at(std::size_t b, std::size_t c, std::size_t t) { return data[(b * channels + c) * time + t]; }
  double at(std::size_t b, std::size_t c, std::size_t t) const { return data[(b * channels + c) * time + t]; }
  std::span<const double> sample(std::size_t b) const { return {data.data() + b * channels * time, channels * time}; }
};

// ---------------------------------------------------------------------------
// Layer-level operations

struct ConvLayerParams {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 3;
  std::vector<double> weight;  // (out, in, kernel)
  std::vector<double> bias;    // (out)
};

// Cross-correlation over time with symmetric zero padding; no activation.
Tensor3 conv1d_forward(const Tensor3& x, const ConvLayerParams& p, int padding);

std::vector<double> relu(std::span<const double> x);
Tensor3 relu(Tensor3 x);

// Dense gates with elementwise peepholes onto the previous cell state:
//   i = sig(W_xi x + W_hi h + w_ci . c + b_i), f and o likewise,
//   c~ = tanh(W_xc x + W_hc h + b_c), c' = f . c + i . c~, h' = o . tanh(c').
struct LstmLayerParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  bool peephole = true;
  std::vector<double> w_xi, w_xf, w_xo, w_xc;  // (hidden, input)
  std::vector<double> w_hi, w_hf, w_ho, w_hc;  // (hidden, hidden)
  std::vector<double> w_ci, w_cf, w_co;        // (hidden); empty when peephole is off
  std::vector<double> b_i, b_f, b_o, b_c;      // (hidden)

  static LstmLayerParams zeros(std::size_t input, std::size_t hidden, bool peephole = true);
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

LstmState lstm_step(std::span<const double> x, std::span<const double> h_prev, std::span<const double> c_prev,
                    const LstmLayerParams& p);

// x: (batch, input, time). Returns the final layer's hidden states as (batch, hidden, time).
Tensor3 lstm_forward(const Tensor3& x, std::span<const LstmLayerParams> layers);

// ---------------------------------------------------------------------------
// CNN-LSTM model

struct ModelConfig {
  std::size_t n_features = 0;
  std::size_t window_len = 0;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t kernel = 3;
  std::size_t padding = 1;
  bool pooling = false;  // max-pool(2) after each conv block
  std::size_t lstm_hidden = 64;
  std::size_t lstm_layers = 2;
  bool peephole = true;
  std::size_t fc1 = 64;
  std::size_t fc2 = 128;
  std::size_t n_classes = kNumClasses;

  std::size_t conv1_len() const;
  std::size_t conv2_len() const;
  std::size_t sequence_len() const { return conv2_len(); }
  std::size_t flatten_size() const { return sequence_len() * lstm_hidden; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// The architecture used by the experiment runner for a given input shape.
ModelConfig default_model_config(std::size_t n_features, std::size_t window_len);

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Fixed parameter order; also the order of tensors in the weight file:
// conv1.weight, conv1.bias, conv2.weight, conv2.bias, then per LSTM layer
// W_xi W_xf W_xo W_xc, W_hi W_hf W_ho W_hc, [W_ci W_cf W_co], b_i b_f b_o b_c,
// then fc1.weight, fc1.bias, fc2.weight, fc2.bias, head.weight, head.bias.
std::vector<TensorSpec> parameter_layout(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

struct ModelParams {
  ModelConfig config;
  std::vector<double> values;

  static ModelParams zeros(const ModelConfig& cfg);
  // Uniform(+-sqrt(1/fan_in)) weights, zero biases, forget-gate bias +1.
  static ModelParams initialize(const ModelConfig& cfg, std::uint64_t seed);

  std::span<double> tensor(std::string_view name);
  std::span<const double> tensor(std::string_view name) const;
  ConvLayerParams conv_layer(std::size_t index) const;  // 0 or 1
  LstmLayerParams lstm_layer(std::size_t index) const;
};

// Raw logits, (batch x n_classes) row-major.
std::vector<double> forward(const Tensor3& x, const ModelParams& p);

struct LossResult {
  double loss = 0.0;
  std::vector<double> dlogits;  // (softmax - onehot) / batch
};

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t n_classes, std::span<const int> targets);
std::vector<double> softmax_rows(std::span<const double> logits, std::size_t n_classes);

struct BackwardResult {
  double loss = 0.0;
  std::vector<double> grad;  // mirrors ModelParams::values
};

BackwardResult backward(const Tensor3& x, std::span<const int> targets, const ModelParams& p);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState for_params(std::size_t n, AdamConfig cfg = {});
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s);

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  AdamConfig adam;
  // Called after each epoch with (epoch index, mean loss); optional.
  std::function<void(std::size_t, double)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  AdamState adam;
  std::vector<double> loss_history;
};

// Window values (time-major T x F) become (batch, F, T).
Tensor3 to_tensor(const WindowedDataset& ds);
Tensor3 to_tensor(const WindowedDataset& ds, std::span<const std::size_t> indices);
std::vector<int> labels_of(const WindowedDataset& ds);

TrainResult train(const WindowedDataset& ds, const ModelConfig& cfg, const TrainConfig& tc, std::uint64_t seed);

struct Prediction {
  std::vector<int> classes;
  std::vector<double> probabilities;  // (n x n_classes)
  std::size_t n_classes = kNumClasses;
};

Prediction predict(const ModelParams& p, const Tensor3& x);
Prediction predict(const ModelParams& p, const WindowedDataset& ds);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t n_checked = 0;
  bool pass = false;
};

// Tiny architecture used for finite-difference checks.
ModelConfig tiny_model_config();

// Relative error is |a - n| / max(|a|, |n|, 1e-6) with central differences at h = 1e-5.
// `corrupt` may modify the analytic gradient before comparison.
GradCheckReport grad_check(const ModelConfig& cfg, double tolerance, std::uint64_t seed = 7,
                           const std::function<void(std::vector<double>&)>& corrupt = {});

// ---------------------------------------------------------------------------
// Weight file: "CLF1", u32 version, architecture, fingerprint, tensors as
// little-endian f64 in parameter_layout order, then optional Adam state.

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct SavedModel {
  ModelParams params;
  std::optional<AdamState> adam;
  std::uint64_t split_fingerprint = 0;
};

std::vector<unsigned char> serialize(const SavedModel& m);
SavedModel deserialize(std::span<const unsigned char> bytes);
void save_model(const std::filesystem::path& path, const SavedModel& m);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace cogload::nn
