#include "cogload/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cogload/csv.hpp"
#include "cogload/error.hpp"
#include "cogload/prng.hpp"

namespace cogload::datagen {

std::string_view to_string(Response r) {
  switch (r) {
    case Response::match: return "match";
    case Response::nomatch: return "nomatch";
    case Response::none: return "none";
  }
  return "none";
}

std::vector<bool> nback_targets(std::span<const int> digits, int level, int block_target) {
  if (level < 0 || level > 2) fail(ErrorCode::invalid_level, "n-back level " + std::to_string(level));
  std::vector<bool> out(digits.size(), false);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (level == 0) {
      out[i] = digits[i] == block_target;
    } else if (i >= static_cast<std::size_t>(level)) {
      out[i] = digits[i] == digits[i - static_cast<std::size_t>(level)];
    }
  }
  return out;
}

void validate(const GenConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config_invalid, "synthetic: " + what);
  };
  require(c.n_subjects >= 1, "n_subjects must be >= 1");
  require(c.n_trials > 2, "n_trials must exceed the highest n-back level");
  require(c.simulator_rate_hz > 0 && c.fnirs_rate_hz > 0 && c.eye_rate_hz > 0, "rates must be positive");
  require(c.target_rate > 0.0 && c.target_rate < 1.0, "target_rate must be in (0, 1)");
  require(c.fnirs_channels >= 1, "fnirs_channels must be >= 1");
  require(c.significant_channels <= c.fnirs_channels, "significant_channels exceeds fnirs_channels");
  require(c.baseline_s >= 0.0, "baseline_s must be >= 0");
  require(c.hemo_time_constant_s > 0.0, "hemo_time_constant_s must be positive");
  require(c.ar_coefficient >= 0.0 && c.ar_coefficient < 1.0, "ar_coefficient must be in [0, 1)");
  require(c.simulator_noise >= 0.0 && c.fnirs_noise >= 0.0 && c.eye_noise >= 0.0, "noise must be >= 0");
  for (double v : {c.speed_mean, c.fixation_mean, c.hbr_ratio}) require(std::isfinite(v), "non-finite parameter");
  for (const auto* a : {&c.speed_delta, &c.fixation_delta, &c.hbo_delta, &c.response_accuracy}) {
    for (double v : *a) require(std::isfinite(v), "effect sizes must be finite");
  }
  for (double rate : {c.simulator_rate_hz, c.fnirs_rate_hz, c.eye_rate_hz}) {
    for (double span : {kTrialSpacingS * static_cast<double>(c.n_trials), c.baseline_s}) {
      const double n = span * rate;
      require(std::abs(n - std::round(n)) < 1e-9, "block durations must hold a whole number of samples at every rate");
    }
  }
  try {
    cogload::validate(c.geometry);
  } catch (const Error& e) {
    fail(ErrorCode::config_invalid, std::string("synthetic geometry: ") + e.what());
  }
}

GenConfig preset(std::string_view name) {
  GenConfig c;
  if (name == "separable") return c;
  if (name == "null") {
    c.speed_delta = {0.0, 0.0, 0.0};
    c.fixation_delta = {0.0, 0.0, 0.0};
    c.hbo_delta = {0.0, 0.0, 0.0};
    c.ar_coefficient = 0.0;
    c.n_trials = 100;
    return c;
  }
  if (name == "split") {
    c.speed_delta = {0.0, -3.0, -3.0};
    c.fixation_delta = {0.0, 0.0, 0.0};
    c.hbo_delta = {0.0, 0.0, 4.0};
    return c;
  }
  fail(ErrorCode::config_invalid, "unknown synthetic preset '" + std::string(name) + "'");
}

NbackBlock gen_nback_stimuli(int level, const GenConfig& cfg, std::uint64_t seed) {
  if (level < 0 || level > 2) fail(ErrorCode::invalid_level, "n-back level " + std::to_string(level));
  if (cfg.n_trials <= static_cast<std::size_t>(level)) fail(ErrorCode::config_invalid, "n_trials must exceed level");
  Rng rng(seed);
  NbackBlock block;
  block.level = level;
  block.block_target = static_cast<int>(rng.below(10));
  // A digit different from `avoid`, uniform over the other nine.
  auto other_than = [&](int avoid) {
    const int d = static_cast<int>(rng.below(9));
    return d >= avoid ? d + 1 : d;
  };
  std::vector<int> digits(cfg.n_trials);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (level == 0) {
      digits[i] = rng.bernoulli(cfg.target_rate) ? block.block_target : other_than(block.block_target);
    } else if (i < static_cast<std::size_t>(level)) {
      digits[i] = static_cast<int>(rng.below(10));
    } else {
      const int back = digits[i - static_cast<std::size_t>(level)];
      digits[i] = rng.bernoulli(cfg.target_rate) ? back : other_than(back);
    }
  }
  const auto targets = nback_targets(digits, level, block.block_target);
  const double accuracy = cfg.response_accuracy[static_cast<std::size_t>(level)];
  for (std::size_t i = 0; i < digits.size(); ++i) {
    NbackTrial t;
    t.digit = digits[i];
    t.onset_s = static_cast<double>(i) * kTrialSpacingS;
    t.is_target = targets[i];
    const double u = rng.uniform();
    if (u < 0.03) {
      t.response = Response::none;
    } else {
      const bool correct = rng.bernoulli(accuracy);
      t.response = (t.is_target == correct) ? Response::match : Response::nomatch;
      const double rt = rng.normal(0.6 + 0.15 * level, 0.15);
      t.rt_s = std::clamp(rt, 0.2, kResponseWindowS);
    }
    block.trials.push_back(t);
  }
  return block;
}

std::string fnirs_channel_base(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ch%03zu", index + 1);
  return buf;
}

std::vector<std::size_t> significant_channel_indices(const GenConfig& cfg) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cfg.significant_channels; ++i) {
    out.push_back(i * cfg.fnirs_channels / cfg.significant_channels);
  }
  return out;
}

namespace {

// AR(1) with the given stationary standard deviation, started from stationarity.
std::vector<double> ar1(Rng& rng, std::size_t n, double phi, double stddev) {
  std::vector<double> x(n);
  const double innovation = stddev * std::sqrt(1.0 - phi * phi);
  double v = rng.normal(0.0, stddev);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) v = phi * v + rng.normal(0.0, innovation);
    x[i] = v;
  }
  return x;
}

ChannelSeries make_series(std::string name, Modality m, double rate, std::vector<double> samples) {
  ChannelSeries s;
  s.name = std::move(name);
  s.modality = m;
  s.rate_hz = rate;
  s.samples = std::move(samples);
  return s;
}

std::size_t samples_for(double duration_s, double rate) {
  return static_cast<std::size_t>(std::llround(duration_s * rate));
}

// level < 0 generates a rest block with no task effects.
Recording gen_block(int level, double duration_s, const GenConfig& cfg, std::uint64_t seed) {
  const bool task = level >= 0;
  const auto L = static_cast<std::size_t>(task ? level : 0);
  const double speed_shift = task ? cfg.speed_delta[L] : 0.0;
  const double fix_shift = task ? cfg.fixation_delta[L] : 0.0;
  const double hbo_amp = task ? cfg.hbo_delta[L] : 0.0;

  Recording rec;
  Rng sim_rng(derive_seed(seed, {1}));
  const std::size_t ns = samples_for(duration_s, cfg.simulator_rate_hz);
  for (std::size_t c = 0; c < kSimulatorChannels.size(); ++c) {
    auto x = ar1(sim_rng, ns, cfg.ar_coefficient, cfg.simulator_noise);
    if (c == 0) {
      for (auto& v : x) v += cfg.speed_mean + speed_shift;
    }
    rec.channels.push_back(make_series(kSimulatorChannels[c], Modality::simulator, cfg.simulator_rate_hz, std::move(x)));
  }

  Rng nirs_rng(derive_seed(seed, {2}));
  const std::size_t nf = samples_for(duration_s, cfg.fnirs_rate_hz);
  // Boxcar over the block through a first-order low-pass.
  std::vector<double> elevation(nf);
  const double alpha = 1.0 - std::exp(-1.0 / (cfg.fnirs_rate_hz * cfg.hemo_time_constant_s));
  double e = 0.0;
  for (std::size_t i = 0; i < nf; ++i) {
    e += alpha * (hbo_amp - e);
    elevation[i] = e;
  }
  std::vector<bool> significant(cfg.fnirs_channels, false);
  for (auto i : significant_channel_indices(cfg)) significant[i] = true;
  for (std::size_t ch = 0; ch < cfg.fnirs_channels; ++ch) {
    std::vector<double> od780(nf), od850(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const double lift = significant[ch] ? elevation[i] : 0.0;
      HbSample hb;
      hb.hbo2 = lift + nirs_rng.normal(0.0, cfg.fnirs_noise);
      hb.hbr = -cfg.hbr_ratio * lift + nirs_rng.normal(0.0, cfg.fnirs_noise);
      const auto od = mbll_forward(hb, cfg.geometry);
      od780[i] = od[0];
      od850[i] = od[1];
    }
    const std::string base = fnirs_channel_base(ch);
    rec.channels.push_back(make_series(base + "_780", Modality::fnirs_od, cfg.fnirs_rate_hz, std::move(od780)));
    rec.channels.push_back(make_series(base + "_850", Modality::fnirs_od, cfg.fnirs_rate_hz, std::move(od850)));
  }

  Rng eye_rng(derive_seed(seed, {3}));
  const std::size_t ne = samples_for(duration_s, cfg.eye_rate_hz);
  auto fix = ar1(eye_rng, ne, cfg.ar_coefficient, cfg.eye_noise);
  for (auto& v : fix) v += cfg.fixation_mean + fix_shift;
  rec.channels.push_back(make_series(kEyeChannels[0], Modality::eye, cfg.eye_rate_hz, std::move(fix)));
  for (std::size_t g = 1; g < kEyeChannels.size(); ++g) {
    auto gaze = ar1(eye_rng, ne, cfg.ar_coefficient, 0.5);
    for (auto& v : gaze) v = std::tanh(v);
    rec.channels.push_back(make_series(kEyeChannels[g], Modality::eye, cfg.eye_rate_hz, std::move(gaze)));
  }

  rec.labels.push_back({0.0, duration_s, task ? condition_of(class_from_index(level)) : Condition::baseline});
  return rec;
}

void append_block(Recording& into, const Recording& block, double offset_s) {
  if (into.channels.empty()) {
    into = block;
    for (auto& iv : into.labels) {
      iv.start_s += offset_s;
      iv.end_s += offset_s;
    }
    return;
  }
  for (std::size_t c = 0; c < into.channels.size(); ++c) {
    auto& dst = into.channels[c].samples;
    const auto& src = block.channels[c].samples;
    dst.insert(dst.end(), src.begin(), src.end());
  }
  for (auto iv : block.labels) {
    iv.start_s += offset_s;
    iv.end_s += offset_s;
    into.labels.push_back(iv);
  }
}

}  // namespace

Recording gen_recording(int level, const GenConfig& cfg, std::uint64_t seed) {
  if (level < 0 || level > 2) fail(ErrorCode::invalid_level, "n-back level " + std::to_string(level));
  validate(cfg);
  return gen_block(level, kTrialSpacingS * static_cast<double>(cfg.n_trials), cfg, seed);
}

Session gen_session(std::size_t subject, const GenConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Session s;
  double t = 0.0;
  if (cfg.baseline_s > 0.0) {
    append_block(s.recording, gen_block(-1, cfg.baseline_s, cfg, derive_seed(seed, {subject, 100})), t);
    t += cfg.baseline_s;
  }
  const double block_s = kTrialSpacingS * static_cast<double>(cfg.n_trials);
  for (int level = 0; level < 3; ++level) {
    const auto L = static_cast<std::uint64_t>(level);
    append_block(s.recording, gen_recording(level, cfg, derive_seed(seed, {subject, L})), t);
    auto block = gen_nback_stimuli(level, cfg, derive_seed(seed, {subject, L, 7}));
    for (auto& trial : block.trials) trial.onset_s += t;
    s.blocks.push_back(std::move(block));
    t += block_s;
  }
  return s;
}

std::string trials_csv(std::span<const NbackBlock> blocks) {
  std::string out = "level,block_target,digit,onset_s,is_target,response,rt_s\n";
  for (const auto& b : blocks) {
    for (const auto& t : b.trials) {
      out += std::to_string(b.level) + "," + std::to_string(b.block_target) + "," + std::to_string(t.digit) + "," +
             format_double(t.onset_s) + "," + (t.is_target ? "1" : "0") + "," + std::string(to_string(t.response)) +
             "," + (t.rt_s ? format_double(*t.rt_s) : std::string()) + "\n";
    }
  }
  return out;
}

}  // namespace cogload::datagen
