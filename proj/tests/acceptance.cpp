// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cogload/cli.hpp"
#include "cogload/csv.hpp"
#include "cogload/datagen.hpp"
#include "cogload/featsel.hpp"
#include "cogload/metrics.hpp"
#include "cogload/nn.hpp"
#include "cogload/pipeline.hpp"
#include "cogload/signal_core.hpp"

using namespace cogload;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto r = nn::grad_check(nn::tiny_model_config(), 1e-4);
  const double secs = seconds_since(t0);
  return {r.pass && secs < 10.0, "max rel error " + sci(r.max_rel_error) + " over " + std::to_string(r.n_checked) +
                                     " params (tol 1e-4), " + fmt(secs, 2) + " s (limit 10 s)"};
}

double brute_force_f(const std::vector<double>& x, const std::vector<int>& g) {
  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < x.size(); ++i) groups[g[i]].push_back(x[i]);
  double grand = 0.0;
  for (double v : x) grand += v;
  grand /= static_cast<double>(x.size());
  double ssb = 0.0, ssw = 0.0;
  for (const auto& [label, vals] : groups) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    ssb += static_cast<double>(vals.size()) * (mean - grand) * (mean - grand);
    for (double v : vals) ssw += (v - mean) * (v - mean);
  }
  const double k = static_cast<double>(groups.size()), n = static_cast<double>(x.size());
  return (ssb / (k - 1)) / (ssw / (n - k));
}

Outcome anova_oracle() {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + gen() % 3;
    const std::size_t n = k + 1 + gen() % 20;
    std::vector<double> x(n);
    std::vector<int> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<int>(i < k ? i : gen() % k);
      x[i] = 3.0 * nd(gen) + static_cast<double>(g[i]);
    }
    const double oracle = brute_force_f(x, g);
    const auto f = anova_f(x, g);
    const double rel = f.infinite ? INFINITY : std::abs(f.value - oracle) / std::max(std::abs(oracle), 1e-300);
    worst = std::max(worst, rel);
  }
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const std::vector<int> g{0, 0, 1, 1, 2, 2};
  const auto f = anova_f(x, g);
  const bool exact = !f.infinite && f.value == 16.0;
  return {worst <= 1e-10 && exact,
          "200 fixtures, worst rel error " + sci(worst) + " (tol 1e-10); worked fixture F = " + fmt(f.value, 17)};
}

Outcome mbll_round_trip() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> coef(0.05, 3.0), conc(-10.0, 10.0), len(0.5, 4.0), dpf(3.0, 8.0);
  double worst = 0.0;
  int geometries = 0;
  for (int s = 0; s < 1000; ++s) {
    MbllGeometry g;
    do {
      g.extinction = {{{coef(gen), coef(gen)}, {coef(gen), coef(gen)}}};
    } while (std::abs(g.determinant()) < 0.05);
    g.path_length_cm = len(gen);
    g.dpf = {dpf(gen), dpf(gen)};
    g.output_scale = (s % 2 == 0) ? 1.0 : 1000.0;
    ++geometries;
    const HbSample c{conc(gen), conc(gen)};
    const auto od = mbll_forward(c, g);
    const auto back = mbll_invert(od[0], od[1], g);
    worst = std::max(worst, std::abs(back.hbo2 - c.hbo2) / std::max(std::abs(c.hbo2), 1e-12));
    worst = std::max(worst, std::abs(back.hbr - c.hbr) / std::max(std::abs(c.hbr), 1e-12));
  }
  return {worst <= 1e-9, "1000 samples over " + std::to_string(geometries) + " random geometries, worst rel error " +
                             sci(worst) + " (tol 1e-9)"};
}

// ---------------------------------------------------------------------------
// Pipeline runs shared by several criteria.

struct RunResult {
  std::vector<metrics::EvalReport> reports;
  std::size_t n_windows = 0;
  double seconds = 0.0;
  double worst_mean = 0.0;
  double worst_std = 0.0;
};

// Scaling statistics of every non-constant training column after prepare().
void scaling_stats(const PreparedData& p, double& worst_mean, double& worst_std) {
  std::vector<std::string> all = p.simulator_features;
  all.insert(all.end(), p.fnirs_features.begin(), p.fnirs_features.end());
  all.insert(all.end(), p.eye_features.begin(), p.eye_features.end());
  const FeatureMatrix m = p.training_rows(all);
  for (std::size_t j = 0; j < m.n_features(); ++j) {
    if (p.scaler.constant[j]) continue;
    double sum = 0.0;
    for (std::size_t r = 0; r < m.n_rows; ++r) sum += m.at(r, j);
    const double mean = sum / static_cast<double>(m.n_rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < m.n_rows; ++r) ss += (m.at(r, j) - mean) * (m.at(r, j) - mean);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_std = std::max(worst_std, std::abs(std::sqrt(ss / static_cast<double>(m.n_rows)) - 1.0));
  }
}

RunResult run_pipeline(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const PreparedData p = prepare(generate_subjects(cfg), cfg);
  RunResult r;
  scaling_stats(p, r.worst_mean, r.worst_std);
  const auto train = p.dataset(false);
  const auto test = p.dataset(true);
  r.n_windows = train.size() + test.size();
  const auto trained = nn::train(train, model_config(cfg.model, train.n_features, train.window_len),
                                 train_config(cfg.model), cfg.seed);
  r.reports = evaluate_models(train, test, trained.params, cfg.baselines);
  r.seconds = seconds_since(t0);
  return r;
}

ExperimentConfig preset_config(const std::string& preset, ModalitySet modality, std::size_t epochs) {
  ExperimentConfig cfg;
  cfg.preset = preset;
  cfg.synthetic = datagen::preset(preset);
  cfg.modality = modality;
  cfg.model.epochs = epochs;
  return cfg;
}

constexpr std::size_t kSeparableEpochs = 40;
constexpr std::size_t kNullEpochs = 20;
constexpr std::size_t kSplitEpochs = 30;

std::string accuracies(const RunResult& r) {
  std::string s;
  for (const auto& rep : r.reports) s += (s.empty() ? "" : ", ") + rep.model + " " + fmt(rep.accuracy);
  return s;
}

Outcome end_to_end(const RunResult& sep, const RunResult& null_run) {
  const double cnn = sep.reports[0].accuracy;
  const double tree = sep.reports[1].accuracy;
  bool ok = sep.n_windows >= 600 && cnn >= 0.95 && tree >= 0.95 && sep.seconds < 300.0;
  for (const auto& rep : null_run.reports) ok = ok && std::abs(rep.accuracy - 1.0 / 3.0) <= 0.1;
  return {ok, "separable (" + std::to_string(sep.n_windows) + " windows, " + std::to_string(kSeparableEpochs) +
                  " epochs, " + fmt(sep.seconds, 1) + " s): CNN-LSTM " + fmt(cnn) + ", Decision trees " + fmt(tree) +
                  "; null (" + std::to_string(null_run.n_windows) + " windows): " + accuracies(null_run)};
}

Outcome fusion_benefit(const RunResult& sim, const RunResult& fused) {
  const double gain = fused.reports[0].accuracy - sim.reports[0].accuracy;
  return {gain >= 0.05, "split preset CNN-LSTM: simulator_only " + fmt(sim.reports[0].accuracy) + ", fused_all " +
                            fmt(fused.reports[0].accuracy) + ", gain " + fmt(100 * gain, 1) + " pp (min 5)"};
}

Outcome scaler_contract(const std::vector<const RunResult*>& runs) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  double worst_mean = 0.0, worst_std = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    FeatureMatrix m;
    m.n_rows = 2 + gen() % 200;
    for (int j = 0; j < 5; ++j) m.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      for (int j = 0; j < 5; ++j) m.values.push_back(std::pow(10.0, j - 2) * nd(gen) + 1e3 * j);
    }
    m.labels.assign(m.n_rows, std::nullopt);
    const auto s = apply_scaler(m, fit_scaler(m));
    const auto again = fit_scaler(s);
    for (int j = 0; j < 5; ++j) {
      worst_mean = std::max(worst_mean, std::abs(again.mean[static_cast<std::size_t>(j)]));
      worst_std = std::max(worst_std, std::abs(again.std[static_cast<std::size_t>(j)] - 1.0));
    }
  }
  for (const auto* r : runs) {
    worst_mean = std::max(worst_mean, r->worst_mean);
    worst_std = std::max(worst_std, r->worst_std);
  }
  return {worst_mean < 1e-9 && worst_std < 1e-6,
          std::to_string(runs.size()) + " pipeline runs + 100 random matrices: worst |mean| " + sci(worst_mean) +
              " (tol 1e-9), worst |std-1| " + sci(worst_std) + " (tol 1e-6)"};
}

// ---------------------------------------------------------------------------

double all_pairs_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Outcome metrics_oracle() {
  std::mt19937_64 gen(404);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 19;
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 8) / 7.0;
      pos[i] = gen() % 2 == 0;
    }
    pos[0] = true;
    pos[n - 1] = false;
    auto flags = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) flags[i] = pos[i];
    exact += metrics::binary_auc(s, std::span<const bool>(flags.get(), n)) == all_pairs_auc(s, pos);
  }

  // Hand fixtures: precision = TP/(TP+FP), recall = TP/(TP+FN), macro means.
  const metrics::Confusion c{{{5, 1, 0}, {2, 3, 1}, {0, 2, 6}}};
  const auto r = metrics::prf1(c);
  const double p = (5.0 / 7 + 3.0 / 6 + 6.0 / 7) / 3;
  const double q = (5.0 / 6 + 3.0 / 6 + 6.0 / 8) / 3;
  auto h = [](double a, double b) { return 2 * a * b / (a + b); };
  const double f = (h(5.0 / 7, 5.0 / 6) + h(3.0 / 6, 3.0 / 6) + h(6.0 / 7, 6.0 / 8)) / 3;
  const auto degenerate = metrics::prf1(metrics::Confusion{{{4, 0, 0}, {1, 2, 0}, {0, 0, 0}}});
  const bool prf_ok = std::abs(r.precision - p) < 1e-15 && std::abs(r.recall - q) < 1e-15 &&
                      std::abs(r.f1 - f) < 1e-15 && degenerate.per_class[2].f1 == 0.0 &&
                      degenerate.per_class[0].precision == 0.8 && degenerate.per_class[1].recall == 2.0 / 3.0;
  return {exact == 100 && prf_ok, std::to_string(exact) + "/100 AUC fixtures exact; P/R/F1 hand fixtures " +
                                      (prf_ok ? "match" : "differ")};
}

Outcome nback_oracle() {
  std::mt19937_64 gen(9);
  datagen::GenConfig cfg;
  std::size_t mismatches = 0;
  std::size_t sequences = 0;
  for (int level = 0; level <= 2; ++level) {
    for (int s = 0; s < 1000; ++s) {
      cfg.n_trials = 3 + gen() % 60;
      const auto block = datagen::gen_nback_stimuli(level, cfg, gen());
      ++sequences;
      for (std::size_t i = 0; i < block.trials.size(); ++i) {
        bool expected = false;
        if (level == 0) {
          expected = block.trials[i].digit == block.block_target;
        } else if (i >= static_cast<std::size_t>(level)) {
          expected = block.trials[i].digit == block.trials[i - static_cast<std::size_t>(level)].digit;
        }
        mismatches += block.trials[i].is_target != expected;
      }
    }
  }
  return {mismatches == 0, std::to_string(sequences) + " generated sequences (1000 per level), " +
                               std::to_string(mismatches) + " flag mismatches"};
}

// ---------------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

bool run_cli_pipeline(const fs::path& root, const fs::path& config) {
  const std::string c = config.string();
  return cli({"--config", c, "--out", (root / "data").string(), "synth"}) == 0 &&
         cli({"--config", c, "--out", (root / "prep").string(), "prep", "--data", (root / "data").string()}) == 0 &&
         cli({"--config", c, "--out", (root / "select").string(), "select", "--prep", (root / "prep").string()}) == 0 &&
         cli({"--config", c, "--out", (root / "model").string(), "train", "--prep", (root / "prep").string()}) == 0 &&
         cli({"--config", c, "--out", (root / "eval").string(), "eval", "--prep", (root / "prep").string(), "--model",
              (root / "model/model.clf").string()}) == 0 &&
         cli({"--config", c, "--out", (root / "eval").string(), "report"}) == 0;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "cogload_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path config = base / "config.json";
  write_text_file(config, R"({"schema_version":1,"seed":11,
    "synthetic":{"preset":"separable","n_trials":16,"fnirs_channels":12,"significant_channels":3},
    "selection":{"top_k":6},"model":{"epochs":4}})");
  if (!run_cli_pipeline(base / "a", config) || !run_cli_pipeline(base / "b", config)) {
    return {false, "pipeline command failed"};
  }
  const std::vector<std::string> files{"prep/features.csv", "prep/windows.csv", "select/fnirs_ranking.csv",
                                       "select/correlation.csv", "model/loss.csv",  "model/model.clf",
                                       "eval/metrics.csv",       "eval/report.md",  "eval/confusion_cnn_lstm.svg"};
  std::size_t identical = 0;
  std::string differing;
  for (const auto& f : files) {
    if (read_text_file(base / "a" / f) == read_text_file(base / "b" / f)) {
      ++identical;
    } else {
      differing += " " + f;
    }
  }
  fs::remove_all(base);
  return {identical == files.size(), std::to_string(identical) + "/" + std::to_string(files.size()) +
                                         " output files byte-identical across two full runs" +
                                         (differing.empty() ? "" : "; differ:" + differing)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [&](const char* name, const std::function<Outcome()>& fn) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded("gradient-check", gradient_check);
  guarded("anova-oracle", anova_oracle);
  guarded("mbll-round-trip", mbll_round_trip);

  RunResult sep, null_run, sim, fused;
  bool runs_ok = true;
  try {
    sep = run_pipeline(preset_config("separable", ModalitySet::fused_all, kSeparableEpochs));
    null_run = run_pipeline(preset_config("null", ModalitySet::fused_all, kNullEpochs));
    sim = run_pipeline(preset_config("split", ModalitySet::simulator_only, kSplitEpochs));
    fused = run_pipeline(preset_config("split", ModalitySet::fused_all, kSplitEpochs));
  } catch (const std::exception& e) {
    runs_ok = false;
    report("pipeline-runs", {false, std::string("exception: ") + e.what()});
  }
  if (runs_ok) {
    report("scaler-contract", scaler_contract({&sep, &null_run, &sim, &fused}));
    report("end-to-end-learning", end_to_end(sep, null_run));
    report("fusion-benefit", fusion_benefit(sim, fused));
  }
  guarded("metrics-oracle", metrics_oracle);
  guarded("determinism", determinism);
  guarded("nback-rule-oracle", nback_oracle);

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures);
  return failures == 0 ? 0 : 1;
}
