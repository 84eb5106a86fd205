#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cogload {

enum class Modality { simulator, fnirs_od, fnirs_hb, eye };

std::string_view to_string(Modality m);

// The three task load levels the classifier distinguishes.
enum class CognitiveClass : int { zero_back = 0, one_back = 1, two_back = 2 };

inline constexpr int kNumClasses = 3;

inline int index_of(CognitiveClass c) { return static_cast<int>(c); }
CognitiveClass class_from_index(int index);
std::string_view to_string(CognitiveClass c);

// Label stream condition. Baseline intervals are carried through ingestion
// and fusion but never become classification windows.
enum class Condition { baseline, zero_back, one_back, two_back };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view text);
std::optional<CognitiveClass> task_class(Condition c);
Condition condition_of(CognitiveClass c);

struct ChannelSeries {
  std::string name;
  Modality modality = Modality::simulator;
  double rate_hz = 1.0;
  std::vector<double> samples;
  double start_time_s = 0.0;

  double end_time_s() const { return start_time_s + static_cast<double>(samples.size()) / rate_hz; }
};

// Throws parse_error when the series violates rate_hz > 0 or holds non-finite samples.
void validate(const ChannelSeries& s);

struct LabelInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  Condition condition = Condition::baseline;
};

struct Recording {
  std::vector<ChannelSeries> channels;
  std::vector<LabelInterval> labels;

  const ChannelSeries* find(std::string_view name) const;
};

// Checks interval ordering and channel coverage of the labelled span.
void validate(const Recording& rec);

// ---------------------------------------------------------------------------
// Modified Beer-Lambert conversion

struct OdPair {
  double od_780 = 0.0;
  double od_850 = 0.0;
  int channel_id = 0;
};

enum class Chromophore : int { hbo2 = 0, hbr = 1 };

struct MbllGeometry {
  // extinction[w][s]: wavelength w (0 = 780 nm, 1 = 850 nm), species s (0 = HbO2, 1 = HbR),
  // in 1/(mM*cm).
  std::array<std::array<double, 2>, 2> extinction{};
  double path_length_cm = 0.0;
  std::array<double, 2> dpf{};
  // Multiplies the solved mM concentrations (1000 yields micromolar).
  double output_scale = 1.0;
  double det_tolerance = 1e-12;
  int channel_count = 0;  // 0 disables the channel_id range check

  double determinant() const;
};

void validate(const MbllGeometry& g);

// Documented arbitrary (non-physiological) geometry used by tests and presets.
MbllGeometry example_geometry();

struct HbSample {
  double hbo2 = 0.0;
  double hbr = 0.0;
};

HbSample mbll_invert(double od_780, double od_850, const MbllGeometry& g);
// Forward model: optical density changes produced by the given concentration changes.
std::array<double, 2> mbll_forward(HbSample conc, const MbllGeometry& g);

struct HbSeriesPair {
  ChannelSeries hbo2;
  ChannelSeries hbr;
};

std::vector<HbSample> mbll_convert(std::span<const OdPair> od, const MbllGeometry& g);
// Converts one channel given as two OD series; output names are `<base>_hbo` / `<base>_hbr`.
HbSeriesPair mbll_convert(const ChannelSeries& od_780, const ChannelSeries& od_850,
                          const MbllGeometry& g, std::string_view base_name);

// ---------------------------------------------------------------------------
// Feature matrices and scaling

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::size_t n_rows = 0;
  std::vector<double> values;  // row-major n_rows x n_features
  std::vector<std::optional<CognitiveClass>> labels;  // empty optional = baseline / unlabelled
  double rate_hz = 1.0;

  std::size_t n_features() const { return feature_names.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * n_features() + col]; }
  double& at(std::size_t row, std::size_t col) { return values[row * n_features() + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_features(), n_features()};
  }
  std::vector<double> column(std::size_t c) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  void check_shape() const;
};

FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::string> names);

inline constexpr double kConstantStdEpsilon = 1e-12;

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;

  std::size_t size() const { return mean.size(); }
};

ScalerParams fit_scaler(const FeatureMatrix& m);
ScalerParams fit_scaler(std::span<const double> row_major, std::size_t n_rows, std::size_t n_features);
FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerParams& p);
void apply_scaler_inplace(std::span<double> row_major, std::size_t n_features, const ScalerParams& p);

// ---------------------------------------------------------------------------
// Resampling, fusion and windowing

enum class DownsampleMethod { mean, decimate };

DownsampleMethod downsample_method_from_string(std::string_view text);
std::string_view to_string(DownsampleMethod m);

ChannelSeries downsample(const ChannelSeries& s, int factor, DownsampleMethod method = DownsampleMethod::mean);

FeatureMatrix align_and_fuse(const Recording& rec, double target_rate_hz, std::span<const std::string> selected,
                             DownsampleMethod method = DownsampleMethod::mean);

struct Window {
  std::size_t start_row = 0;  // offset in the source matrix
  CognitiveClass label = CognitiveClass::zero_back;
  std::vector<double> values;  // T x n_features, time-major
};

struct WindowedDataset {
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<Window> windows;

  std::size_t size() const { return windows.size(); }
  std::array<std::size_t, kNumClasses> class_counts() const;
};

// Windows are cut inside maximal runs of identical task labels; rows without a
// task class (baseline, unlabelled) separate runs and are never windowed.
WindowedDataset segment_windows(const FeatureMatrix& m, std::size_t window_len, std::size_t stride);

void append(WindowedDataset& into, const WindowedDataset& more);

}  // namespace cogload
