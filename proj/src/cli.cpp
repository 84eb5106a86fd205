#include "cogload/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogload/config.hpp"
#include "cogload/csv.hpp"
#include "cogload/error.hpp"
#include "cogload/featsel.hpp"
#include "cogload/metrics.hpp"
#include "cogload/nn.hpp"
#include "cogload/pipeline.hpp"
#include "cogload/svg.hpp"

namespace cogload {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exclusive `.lock` in the output directory for the duration of a command.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (f == nullptr) fail(ErrorCode::io_error, "output directory is locked by another run: " + path_.string());
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

fs::path require_out(const Globals& g) {
  if (g.out_dir.empty()) fail(ErrorCode::config_invalid, "--out is required");
  return g.out_dir;
}

std::string slug(std::string_view model) {
  std::string s;
  for (char c : model) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!s.empty() && s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

int cmd_synth(const Globals& g, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path dir = require_out(g);
  DirLock lock(dir);
  const auto written = synth_dataset(cfg, dir);
  out << "wrote " << written.size() << " subject(s) to " << dir.string() << "\n";
  return 0;
}

int cmd_prep(const Globals& g, const std::string& data_dir, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path dir = require_out(g);
  std::vector<SubjectRecording> subjects;
  if (!data_dir.empty()) {
    subjects = load_subjects(data_dir);
  } else if (cfg.data_source == "files") {
    subjects = load_subjects(cfg.data_path);
  } else {
    subjects = generate_subjects(cfg);
  }
  DirLock lock(dir);
  const PreparedData p = prepare(subjects, cfg);
  write_prepared(dir, p);
  const auto train = p.dataset(false);
  const auto test = p.dataset(true);
  out << "prepared " << p.model_features.size() << " model features, " << train.size() << " training and "
      << test.size() << " test windows\n";
  return 0;
}

int cmd_select(const Globals& g, const std::string& prep_dir, std::optional<std::size_t> k, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path dir = require_out(g);
  const PreparedData p = read_prepared(prep_dir);
  const std::size_t top_k = k.value_or(cfg.top_k);
  DirLock lock(dir);

  const FeatureRanking fnirs = rank_features(p.training_rows(p.fnirs_features));
  const auto selected = select_top_k(fnirs, top_k);
  write_text_file(dir / "fnirs_ranking.csv", ranking_csv(fnirs));
  write_text_file(dir / "simulator_ranking.csv", ranking_csv(rank_features(p.training_rows(p.simulator_features))));
  if (!p.eye_features.empty()) {
    write_text_file(dir / "eye_ranking.csv", ranking_csv(rank_features(p.training_rows(p.eye_features))));
  }
  std::string sel = "rank,feature\n";
  for (std::size_t i = 0; i < selected.size(); ++i) sel += std::to_string(i + 1) + "," + selected[i] + "\n";
  write_text_file(dir / "selected.csv", sel);

  const auto merged = model_columns(p, ModalitySet::fused_all, selected);
  const CorrelationMap corr = correlation_matrix(p.training_rows(merged));
  write_text_file(dir / "correlation.csv", correlation_csv(corr));
  write_text_file(dir / "correlation.svg", svg::correlation_heatmap(corr));
  out << "ranked " << fnirs.size() << " fNIRS features; correlation map over " << merged.size() << " features\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& prep_dir, std::optional<std::size_t> epochs, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path dir = require_out(g);
  const PreparedData p = read_prepared(prep_dir);
  const WindowedDataset train = p.dataset(false);
  const nn::ModelConfig mc = model_config(cfg.model, train.n_features, train.window_len);
  nn::TrainConfig tc = train_config(cfg.model);
  if (epochs) tc.epochs = *epochs;
  DirLock lock(dir);

  const nn::TrainResult r = nn::train(train, mc, tc, cfg.seed);
  nn::save_model(dir / "model.clf", {r.params, r.adam, p.fingerprint()});
  std::string loss = "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
    loss += std::to_string(e + 1) + "," + format_double(r.loss_history[e]) + "\n";
  }
  write_text_file(dir / "loss.csv", loss);
  out << "trained " << tc.epochs << " epochs on " << train.size() << " windows; final loss "
      << (r.loss_history.empty() ? 0.0 : r.loss_history.back()) << "\n";
  return 0;
}

int cmd_eval(const Globals& g, const std::string& prep_dir, const std::string& model_path, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path dir = require_out(g);
  const PreparedData p = read_prepared(prep_dir);
  const nn::SavedModel saved = nn::load_model(model_path);
  if (saved.split_fingerprint != p.fingerprint()) {
    fail(ErrorCode::split_mismatch, "model was trained on a different split than " + prep_dir);
  }
  const WindowedDataset train = p.dataset(false);
  const WindowedDataset test = p.dataset(true);
  if (saved.params.config.n_features != test.n_features || saved.params.config.window_len != test.window_len) {
    fail(ErrorCode::split_mismatch, "model input shape does not match the prepared features");
  }
  const auto reports = evaluate_models(train, test, saved.params, cfg.baselines);

  DirLock lock(dir);
  write_text_file(dir / "metrics.csv", metrics::report_csv(reports));
  json models = json::array();
  for (const auto& r : reports) {
    const std::string s = slug(r.model);
    write_text_file(dir / ("confusion_" + s + ".csv"), metrics::confusion_csv(r.confusion));
    write_text_file(dir / ("confusion_" + s + ".svg"), svg::confusion_matrix(r.confusion, r.model));
    models.push_back({{"model", r.model}, {"slug", s}});
  }
  const auto counts = test.class_counts();
  char fp[24];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(p.fingerprint()));
  const json meta{{"split_fingerprint", fp},
                  {"seed", p.seed},
                  {"test_fraction", p.test_fraction},
                  {"n_train", train.size()},
                  {"n_test", test.size()},
                  {"test_class_counts", counts},
                  {"n_features", test.n_features},
                  {"window_len", test.window_len},
                  {"averaging", "macro"},
                  {"auc", "one-vs-rest macro"},
                  {"models", models}};
  write_text_file(dir / "eval.json", meta.dump(2) + "\n");
  for (const auto& r : reports) out << r.model << ": accuracy " << r.accuracy << "\n";
  return 0;
}

int cmd_report(const Globals& g, const std::string& eval_dir_arg, std::ostream& out) {
  const fs::path dir = require_out(g);
  const fs::path eval_dir = eval_dir_arg.empty() ? dir : fs::path(eval_dir_arg);
  const CsvTable table = read_csv(eval_dir / "metrics.csv");
  json meta;
  try {
    meta = json::parse(read_text_file(eval_dir / "eval.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("eval.json: ") + e.what());
  }
  DirLock lock(dir);

  std::string md = "# Cognitive load classification report\n\n";
  md += "Precision, recall and F1-score are macro averages over the three load classes; "
        "AUC is the one-vs-rest macro average.\n\n";
  md += "Test windows: " + std::to_string(meta.at("n_test").get<std::size_t>()) +
        ", training windows: " + std::to_string(meta.at("n_train").get<std::size_t>()) +
        ", features per time step: " + std::to_string(meta.at("n_features").get<std::size_t>()) +
        ", split fingerprint `" + meta.at("split_fingerprint").get<std::string>() + "`.\n\n";
  md += "|";
  for (const auto& h : table.header) md += " " + h + " |";
  md += "\n|";
  for (std::size_t i = 0; i < table.header.size(); ++i) md += i == 0 ? "---|" : "---:|";
  md += "\n";
  for (const auto& row : table.rows) {
    md += "|";
    for (const auto& cell : row) md += " " + cell + " |";
    md += "\n";
  }
  md += "\n## Confusion matrices\n\n";
  for (const auto& m : meta.at("models")) {
    const std::string s = m.at("slug").get<std::string>();
    md += "- " + m.at("model").get<std::string>() + ": `confusion_" + s + ".svg`\n";
  }
  write_text_file(dir / "report.md", md);
  out << "wrote " << (dir / "report.md").string() << "\n";
  return 0;
}

int cmd_config(const Globals& g, bool defaults, std::ostream& out) {
  const ExperimentConfig cfg = defaults ? ExperimentConfig{} : resolve_config(g);
  out << to_json(cfg).dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal cognitive load experiment runner", "cogload"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON experiment config");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", g.out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "generate synthetic per-subject CSVs");
  auto* prep = app.add_subcommand("prep", "MBLL, fusion, windowing, split and scaling");
  std::string data_dir;
  prep->add_option("--data", data_dir, "directory of subject_* recordings");
  auto* select = app.add_subcommand("select", "ANOVA rankings and correlation map");
  std::string prep_dir;
  std::optional<std::size_t> k;
  select->add_option("--prep", prep_dir, "prep output directory")->required();
  select->add_option("--k", k, "number of fNIRS features to select");
  auto* train = app.add_subcommand("train", "train the CNN-LSTM");
  std::optional<std::size_t> epochs;
  train->add_option("--prep", prep_dir, "prep output directory")->required();
  train->add_option("--epochs", epochs, "override model.epochs");
  auto* eval = app.add_subcommand("eval", "evaluate the CNN-LSTM and the baselines");
  std::string model_path;
  eval->add_option("--prep", prep_dir, "prep output directory")->required();
  eval->add_option("--model", model_path, "weight file")->required();
  auto* report = app.add_subcommand("report", "render report.md from eval outputs");
  std::string eval_dir;
  report->add_option("--eval", eval_dir, "eval output directory (default: --out)");
  auto* config = app.add_subcommand("config", "print the resolved config");
  bool defaults = false;
  config->add_flag("--defaults", defaults, "print built-in defaults");

  for (auto* sub : {synth, prep, select, train, eval, report, config}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, out);
    if (*prep) return cmd_prep(g, data_dir, out);
    if (*select) return cmd_select(g, prep_dir, k, out);
    if (*train) return cmd_train(g, prep_dir, epochs, out);
    if (*eval) return cmd_eval(g, prep_dir, model_path, out);
    if (*report) return cmd_report(g, eval_dir, out);
    if (*config) return cmd_config(g, defaults, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cogload
