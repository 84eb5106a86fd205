#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cogload/cli.hpp"
#include "cogload/config.hpp"
#include "cogload/csv.hpp"
#include "cogload/error.hpp"
#include "cogload/metrics.hpp"
#include "cogload/nn.hpp"
#include "cogload/pipeline.hpp"

using namespace cogload;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cogload_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) { return read_text_file(p); }

std::size_t data_rows(const fs::path& csv) {
  std::size_t n = 0;
  for (const auto& row : read_csv(csv).rows) n += !row.empty();
  return n;
}

// Small synthetic experiment shared by the CLI tests.
fs::path small_config(const fs::path& dir, const std::string& extra = "") {
  const fs::path cfg = dir / "config.json";
  write(cfg, R"({"schema_version":1,"seed":7,
    "synthetic":{"preset":"separable","n_trials":12,"baseline_s":7,"fnirs_channels":8,"significant_channels":2},
    "selection":{"top_k":4},
    "model":{"epochs":3,"lstm_hidden":8,"fc1":8,"fc2":8})" + extra + "}");
  return cfg;
}

}  // namespace

TEST(Config, DefaultsRoundTripAndUnknownKeys) {
  const auto j = to_json(ExperimentConfig{});
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.model.epochs, 1000u);
  EXPECT_EQ(back.top_k, 20u);

  auto bad = j;
  bad["model"]["learning_rat"] = 0.1;
  try {
    config_from_json(bad);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_invalid);
    EXPECT_NE(std::string(e.what()).find("model.learning_rat"), std::string::npos);
  }
  auto wrong_type = j;
  wrong_type["window"]["length"] = -3;
  EXPECT_THROW(config_from_json(wrong_type), Error);
  auto bad_version = j;
  bad_version["schema_version"] = 2;
  EXPECT_THROW(config_from_json(bad_version), Error);
  auto singular = j;
  singular["mbll"]["extinction"] = {{1.0, 2.0}, {2.0, 4.0}};
  EXPECT_THROW(config_from_json(singular), Error);
}

TEST(Config, PresetThenOverrides) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"synthetic":{"preset":"null","n_trials":30}})"));
  EXPECT_EQ(c.synthetic.n_trials, 30u);
  EXPECT_EQ(c.synthetic.hbo_delta[2], 0.0);
}

TEST(Cli, ConfigDefaultsPrintsJson) {
  const auto r = cli({"config", "--defaults"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out), to_json(ExperimentConfig{}));
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
}

TEST(Cli, SynthWritesDeterministicFiles) {
  const auto dir = scratch("synth");
  const auto cfg = small_config(dir);
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", (dir / "a").string(), "synth"}).code, 0);
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", (dir / "b").string(), "synth"}).code, 0);
  for (const char* f : {"simulator.csv", "fnirs.csv", "eye.csv", "labels.csv", "trials.csv"}) {
    EXPECT_EQ(slurp(dir / "a/subject_01" / f), slurp(dir / "b/subject_01" / f)) << f;
  }
  const double seconds = 7 + 3 * 12 * 3.5;
  EXPECT_EQ(data_rows(dir / "a/subject_01/simulator.csv"), static_cast<std::size_t>(seconds * 50));
  EXPECT_EQ(data_rows(dir / "a/subject_01/fnirs.csv"), static_cast<std::size_t>(seconds * 10));
  EXPECT_EQ(read_csv(dir / "a/subject_01/fnirs.csv").header.size(), 1u + 16u);
  EXPECT_EQ(data_rows(dir / "a/subject_01/labels.csv"), 4u);
  EXPECT_EQ(data_rows(dir / "a/subject_01/trials.csv"), 36u);
}

TEST(Cli, InvalidConfigKeyNamed) {
  const auto dir = scratch("badkey");
  const auto cfg = small_config(dir, R"(,"windw":{"length":5})");
  const auto r = cli({"--config", cfg.string(), "--out", (dir / "o").string(), "synth"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("windw"), std::string::npos);
}

TEST(Cli, FullPipeline) {
  const auto dir = scratch("pipeline");
  const auto cfg = small_config(dir);
  const std::string c = cfg.string();
  ASSERT_EQ(cli({"--config", c, "--out", (dir / "data").string(), "synth"}).code, 0);
  auto r = cli({"--config", c, "--out", (dir / "prep").string(), "prep", "--data", (dir / "data").string()});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto prep = read_prepared(dir / "prep");
  EXPECT_EQ(prep.model_features.size(), 10u + 4u + 3u);
  check_scaled(prep);
  const auto train = prep.dataset(false);
  const auto test = prep.dataset(true);
  const auto tc = train.class_counts();
  const auto ec = test.class_counts();
  for (int k = 1; k < 3; ++k) {
    EXPECT_LE(std::max(tc[0], tc[k]) - std::min(tc[0], tc[k]), 1u);
    EXPECT_LE(std::max(ec[0], ec[k]) - std::min(ec[0], ec[k]), 1u);
  }

  r = cli({"--config", c, "--out", (dir / "sel").string(), "select", "--prep", (dir / "prep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto selected = read_csv(dir / "sel/selected.csv");
  ASSERT_EQ(selected.rows.size(), 4u);
  std::vector<std::string> top;
  for (const auto& row : selected.rows) top.push_back(row[1]);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, (std::vector<std::string>{"ch001_hbo", "ch001_hbr", "ch005_hbo", "ch005_hbr"}));
  const std::string svg = slurp(dir / "sel/correlation.svg");
  EXPECT_NE(svg.find("data-features=\"17\""), std::string::npos);
  std::size_t cells = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"cell\"", pos)) != std::string::npos; ++pos) ++cells;
  EXPECT_EQ(cells, 17u * 17u);
  EXPECT_NE(cli({"--config", c, "--out", (dir / "sel2").string(), "select", "--prep", (dir / "prep").string(),
                 "--k", "17"}).code, 0);

  r = cli({"--config", c, "--out", (dir / "model").string(), "train", "--prep", (dir / "prep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(dir / "model/loss.csv"), 3u);
  const auto saved = nn::load_model(dir / "model/model.clf");
  EXPECT_EQ(nn::predict(saved.params, test).probabilities,
            nn::predict(nn::load_model(dir / "model/model.clf").params, test).probabilities);

  r = cli({"--config", c, "--out", (dir / "eval").string(), "eval", "--prep", (dir / "prep").string(), "--model",
           (dir / "model/model.clf").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics_table = read_csv(dir / "eval/metrics.csv");
  EXPECT_EQ(metrics_table.header,
            (std::vector<std::string>{"Model", "Accuracy", "F1-score", "Precision", "Recall", "AUC"}));
  ASSERT_EQ(metrics_table.rows.size(), 5u);
  EXPECT_EQ(metrics_table.rows[0][0], "CNN-LSTM");

  // Metrics recomputed from each emitted confusion matrix agree with the report rows.
  for (const auto& row : metrics_table.rows) {
    std::string slug;
    for (char ch : row[0]) slug += std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::tolower(ch)) : '_';
    const auto table = read_csv(dir / ("eval/confusion_" + slug + ".csv"));
    metrics::Confusion cm{};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) cm[i][j] = static_cast<std::size_t>(parse_int(table.rows[i][j + 1]));
    }
    const auto prf = metrics::prf1(cm);
    EXPECT_DOUBLE_EQ(parse_double(row[1]), metrics::accuracy(cm));
    EXPECT_DOUBLE_EQ(parse_double(row[2]), prf.f1);
    EXPECT_DOUBLE_EQ(parse_double(row[3]), prf.precision);
    EXPECT_DOUBLE_EQ(parse_double(row[4]), prf.recall);
    EXPECT_TRUE(fs::exists(dir / ("eval/confusion_" + slug + ".svg")));
  }

  r = cli({"--out", (dir / "eval").string(), "report"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string md = slurp(dir / "eval/report.md");
  EXPECT_NE(md.find("macro"), std::string::npos);
  EXPECT_NE(md.find("one-vs-rest"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "eval/.lock"));

  // A model trained on another split is refused.
  const auto other = small_config(dir, R"(,"split":{"test_fraction":0.3})");
  ASSERT_EQ(cli({"--config", other.string(), "--out", (dir / "prep_b").string(), "prep", "--data",
                 (dir / "data").string()}).code, 0);
  r = cli({"--config", c, "--out", (dir / "eval_b").string(), "eval", "--prep", (dir / "prep_b").string(), "--model",
           (dir / "model/model.clf").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("SplitMismatch"), std::string::npos);
}

TEST(Cli, MissingLabelsFileFails) {
  const auto dir = scratch("nolabels");
  const auto cfg = small_config(dir);
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", (dir / "data").string(), "synth"}).code, 0);
  fs::remove(dir / "data/subject_01/labels.csv");
  const auto r = cli({"--config", cfg.string(), "--out", (dir / "prep").string(), "prep", "--data", (dir / "data").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("labels.csv"), std::string::npos);
}

TEST(Cli, LockedOutputDirectoryRefused) {
  const auto dir = scratch("lock");
  const auto cfg = small_config(dir);
  fs::create_directories(dir / "out");
  write(dir / "out/.lock", "");
  const auto r = cli({"--config", cfg.string(), "--out", (dir / "out").string(), "synth"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("locked"), std::string::npos);
}

TEST(Cli, SimulatorOnlyAndFusedBothTrain) {
  const auto dir = scratch("modalities");
  for (std::string mod : {"simulator_only", "fused_all"}) {
    const auto cfg = small_config(dir, R"(,"modality":")" + mod + "\"");
    const fs::path base = dir / mod;
    ASSERT_EQ(cli({"--config", cfg.string(), "--out", (base / "prep").string(), "prep"}).code, 0);
    const auto r = cli({"--config", cfg.string(), "--out", (base / "model").string(), "train", "--prep",
                        (base / "prep").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_prepared(base / "prep").model_features.size(), mod == "fused_all" ? 17u : 10u);
  }
}
