#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload::datagen {

inline constexpr double kStimulusDurationS = 1.0;
inline constexpr double kResponseWindowS = 2.5;
inline constexpr double kTrialSpacingS = kStimulusDurationS + kResponseWindowS;

enum class Response { match, nomatch, none };
std::string_view to_string(Response r);

struct NbackTrial {
  int digit = 0;
  double onset_s = 0.0;
  bool is_target = false;
  Response response = Response::none;
  std::optional<double> rt_s;
};

struct NbackBlock {
  int level = 0;
  int block_target = 0;  // the fixed target digit used at level 0
  std::vector<NbackTrial> trials;
};

// The n-back rule: trial i is a target when digit[i] == digit[i - level]
// (level >= 1), or when digit[i] == block_target (level 0).
std::vector<bool> nback_targets(std::span<const int> digits, int level, int block_target);

// Per-level effect sizes are indexed by n-back level (0, 1, 2).
struct GenConfig {
  std::size_t n_subjects = 1;
  std::size_t n_trials = 40;  // per load block
  double baseline_s = 20.0;
  double simulator_rate_hz = 50.0;
  double fnirs_rate_hz = 10.0;
  double eye_rate_hz = 50.0;
  std::size_t fnirs_channels = 48;
  std::size_t significant_channels = 6;
  double target_rate = 0.3;
  std::array<double, 3> response_accuracy{0.95, 0.9, 0.85};

  double speed_mean = 30.0;  // m/s
  std::array<double, 3> speed_delta{0.0, -3.0, -6.0};
  double fixation_mean = 0.25;  // s
  std::array<double, 3> fixation_delta{0.0, 0.05, 0.1};
  std::array<double, 3> hbo_delta{0.0, 2.0, 4.0};  // output units of the geometry (micromolar by default)
  double hbr_ratio = 0.3;
  double hemo_time_constant_s = 4.0;

  double ar_coefficient = 0.9;  // simulator and eye noise
  double simulator_noise = 0.5;
  double fnirs_noise = 0.5;
  double eye_noise = 0.02;

  MbllGeometry geometry = example_geometry();
};

void validate(const GenConfig& cfg);

// "separable": every modality carries strong class signal.
// "null": no class signal, white noise only.
// "split": simulator separates 0-back from the rest, fNIRS separates 2-back from the rest.
GenConfig preset(std::string_view name);

NbackBlock gen_nback_stimuli(int level, const GenConfig& cfg, std::uint64_t seed);

inline constexpr std::array<const char*, 10> kSimulatorChannels{
    "car_speed",          "brake",              "steering",           "angular_velocity_x", "angular_velocity_y",
    "angular_velocity_z", "linear_accel_x",     "linear_accel_y",     "linear_accel_z",     "cabin_orientation"};
inline constexpr std::array<const char*, 3> kEyeChannels{"fixation_duration", "gaze_x", "gaze_y"};

std::string fnirs_channel_base(std::size_t index);  // "ch001"
std::vector<std::size_t> significant_channel_indices(const GenConfig& cfg);

// One load block starting at t = 0. fNIRS channels are optical densities
// (`chNNN_780`, `chNNN_850`) produced by the forward Beer-Lambert model.
Recording gen_recording(int level, const GenConfig& cfg, std::uint64_t seed);

struct Session {
  Recording recording;  // baseline block followed by 0-, 1-, 2-back blocks
  std::vector<NbackBlock> blocks;
};

Session gen_session(std::size_t subject, const GenConfig& cfg, std::uint64_t seed);

std::string trials_csv(std::span<const NbackBlock> blocks);

}  // namespace cogload::datagen
