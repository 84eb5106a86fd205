#include "cogload/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "cogload/baselines.hpp"
#include "cogload/csv.hpp"
#include "cogload/error.hpp"
#include "cogload/prng.hpp"

namespace cogload {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 0x53504c4954ULL;

std::string subject_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "subject_%02zu", index);
  return buf;
}

std::vector<ChannelSeries> channels_of(const Recording& rec, Modality m) {
  std::vector<ChannelSeries> out;
  for (const auto& ch : rec.channels) {
    if (ch.modality == m) out.push_back(ch);
  }
  return out;
}

std::vector<std::string> names_of(const Recording& rec, Modality m) {
  std::vector<std::string> out;
  for (const auto& ch : rec.channels) {
    if (ch.modality == m) out.push_back(ch.name);
  }
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::size_t> column_indices(const FeatureMatrix& m, std::span<const std::string> columns) {
  std::vector<std::size_t> idx;
  idx.reserve(columns.size());
  for (const auto& c : columns) {
    auto i = m.index_of(c);
    if (!i) fail(ErrorCode::dimension_mismatch, "unknown feature '" + c + "'");
    idx.push_back(*i);
  }
  return idx;
}

std::vector<std::vector<bool>> training_masks(const PreparedData& p) {
  std::vector<std::vector<bool>> mask(p.matrices.size());
  for (std::size_t s = 0; s < p.matrices.size(); ++s) mask[s].assign(p.matrices[s].n_rows, false);
  for (const auto& w : p.windows) {
    if (w.test) continue;
    for (std::size_t r = 0; r < p.window_len; ++r) mask[w.subject][w.start_row + r] = true;
  }
  return mask;
}

std::string label_text(const std::optional<CognitiveClass>& c) {
  return c ? std::string(to_string(*c)) : std::string("none");
}

std::optional<CognitiveClass> label_from_text(std::string_view text) {
  if (text == "none") return std::nullopt;
  return task_class(condition_from_string(text));
}

int argmax(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  return static_cast<int>(best);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_session(const fs::path& dir, const datagen::Session& s) {
  fs::create_directories(dir);
  const auto sim = channels_of(s.recording, Modality::simulator);
  const auto od = channels_of(s.recording, Modality::fnirs_od);
  const auto eye = channels_of(s.recording, Modality::eye);
  write_text_file(dir / "simulator.csv", series_csv(sim));
  write_text_file(dir / "fnirs.csv", series_csv(od));
  write_text_file(dir / "eye.csv", series_csv(eye));
  write_text_file(dir / "labels.csv", labels_csv(s.recording.labels));
  write_text_file(dir / "trials.csv", datagen::trials_csv(s.blocks));
}

std::vector<fs::path> synth_dataset(const ExperimentConfig& cfg, const fs::path& out_dir) {
  std::vector<fs::path> dirs;
  for (std::size_t i = 1; i <= cfg.synthetic.n_subjects; ++i) {
    const fs::path dir = out_dir / subject_name(i);
    write_session(dir, datagen::gen_session(i, cfg.synthetic, cfg.seed));
    dirs.push_back(dir);
  }
  return dirs;
}

std::vector<SubjectRecording> generate_subjects(const ExperimentConfig& cfg) {
  std::vector<SubjectRecording> out;
  for (std::size_t i = 1; i <= cfg.synthetic.n_subjects; ++i) {
    out.push_back({subject_name(i), datagen::gen_session(i, cfg.synthetic, cfg.seed).recording});
  }
  return out;
}

std::vector<SubjectRecording> load_subjects(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) fail(ErrorCode::io_error, "data directory not found: " + data_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("subject_", 0) == 0) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) fail(ErrorCode::io_error, "no subject_* directories in " + data_dir.string());

  std::vector<SubjectRecording> out;
  for (const auto& dir : dirs) {
    SubjectRecording s;
    s.subject = dir.filename().string();
    for (auto [file, modality] : {std::pair{"simulator.csv", Modality::simulator},
                                  std::pair{"fnirs.csv", Modality::fnirs_od}, std::pair{"eye.csv", Modality::eye}}) {
      auto chans = read_series_csv(dir / file, modality);
      for (auto& c : chans) s.recording.channels.push_back(std::move(c));
    }
    s.recording.labels = read_labels_csv(dir / "labels.csv");
    validate(s.recording);
    out.push_back(std::move(s));
  }
  return out;
}

Recording convert_fnirs(const Recording& rec, const MbllGeometry& g) {
  Recording out;
  out.labels = rec.labels;
  for (const auto& ch : rec.channels) {
    if (ch.modality != Modality::fnirs_od) {
      out.channels.push_back(ch);
      continue;
    }
    if (ends_with(ch.name, "_850")) continue;
    if (!ends_with(ch.name, "_780")) fail(ErrorCode::parse_error, "fNIRS channel '" + ch.name + "' lacks a wavelength suffix");
    const std::string base = ch.name.substr(0, ch.name.size() - 4);
    const ChannelSeries* partner = rec.find(base + "_850");
    if (partner == nullptr) fail(ErrorCode::parse_error, "fNIRS channel '" + base + "_850' missing");
    auto pair = mbll_convert(ch, *partner, g, base);
    out.channels.push_back(std::move(pair.hbo2));
    out.channels.push_back(std::move(pair.hbr));
  }
  return out;
}

std::string PreparedData::manifest_csv() const {
  std::string out = "# seed=" + std::to_string(seed) + " test_fraction=" + format_double(test_fraction) +
                    " window_len=" + std::to_string(window_len) + " stride=" + std::to_string(stride) + "\n";
  out += "window,subject,start_row,label,split\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    out += std::to_string(i) + "," + subjects[w.subject] + "," + std::to_string(w.start_row) + "," +
           std::string(to_string(w.label)) + "," + (w.test ? "test" : "train") + "\n";
  }
  return out;
}

std::uint64_t PreparedData::fingerprint() const {
  std::string text = manifest_csv();
  for (const auto& f : model_features) text += f + "\n";
  return fnv1a(text);
}

FeatureMatrix PreparedData::training_rows(std::span<const std::string> columns) const {
  const auto mask = training_masks(*this);
  FeatureMatrix out;
  out.feature_names.assign(columns.begin(), columns.end());
  out.rate_hz = matrices.empty() ? 1.0 : matrices.front().rate_hz;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    const auto& m = matrices[s];
    const auto idx = column_indices(m, columns);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (!mask[s][r]) continue;
      for (auto j : idx) out.values.push_back(m.at(r, j));
      out.labels.push_back(m.labels[r]);
      ++out.n_rows;
    }
  }
  return out;
}

WindowedDataset PreparedData::dataset(bool test) const {
  WindowedDataset ds;
  ds.window_len = window_len;
  ds.stride = stride;
  ds.n_features = model_features.size();
  ds.feature_names = model_features;
  std::vector<std::vector<std::size_t>> idx;
  for (const auto& m : matrices) idx.push_back(column_indices(m, model_features));
  for (const auto& w : windows) {
    if (w.test != test) continue;
    const auto& m = matrices[w.subject];
    Window out;
    out.start_row = w.start_row;
    out.label = w.label;
    out.values.reserve(window_len * ds.n_features);
    for (std::size_t r = 0; r < window_len; ++r) {
      for (auto j : idx[w.subject]) out.values.push_back(m.at(w.start_row + r, j));
    }
    ds.windows.push_back(std::move(out));
  }
  return ds;
}

std::vector<std::string> model_columns(const PreparedData& p, ModalitySet modality,
                                       std::span<const std::string> fnirs_selected) {
  std::vector<std::string> cols = p.simulator_features;
  if (modality == ModalitySet::fused_all) {
    cols.insert(cols.end(), fnirs_selected.begin(), fnirs_selected.end());
    cols.insert(cols.end(), p.eye_features.begin(), p.eye_features.end());
  }
  return cols;
}

PreparedData prepare(const std::vector<SubjectRecording>& subjects, const ExperimentConfig& cfg) {
  if (subjects.empty()) fail(ErrorCode::empty_dataset, "no recordings to prepare");
  PreparedData p;
  p.seed = cfg.seed;
  p.test_fraction = cfg.test_fraction;
  p.window_len = cfg.window_len;
  p.stride = cfg.window_stride;

  std::vector<std::string> all;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const Recording hb = convert_fnirs(subjects[s].recording, cfg.geometry);
    if (s == 0) {
      p.simulator_features = names_of(hb, Modality::simulator);
      p.fnirs_features = names_of(hb, Modality::fnirs_hb);
      p.eye_features = names_of(hb, Modality::eye);
      all = p.simulator_features;
      all.insert(all.end(), p.fnirs_features.begin(), p.fnirs_features.end());
      all.insert(all.end(), p.eye_features.begin(), p.eye_features.end());
    }
    double rate = 0.0;
    if (cfg.fused_rate_hz) {
      rate = *cfg.fused_rate_hz;
    } else {
      const auto fnirs = channels_of(hb, Modality::fnirs_hb);
      if (fnirs.empty()) fail(ErrorCode::rate_incompatible, "no fNIRS channels to take the fused rate from");
      rate = fnirs.front().rate_hz;
    }
    FeatureMatrix m = align_and_fuse(hb, rate, all, cfg.downsample);
    const WindowedDataset ws = segment_windows(m, cfg.window_len, cfg.window_stride);
    for (const auto& w : ws.windows) p.windows.push_back({s, w.start_row, w.label, false});
    p.subjects.push_back(subjects[s].subject);
    p.matrices.push_back(std::move(m));
  }

  // Stratified block split. Within each run of consecutive same-label windows a
  // contiguous block of round(f * n) windows, at a seeded random offset, becomes
  // test; training windows sharing rows with that block are dropped.
  Rng rng(derive_seed(cfg.seed, {kSplitStream}));
  std::vector<WindowRef> kept;
  std::size_t i = 0;
  while (i < p.windows.size()) {
    std::size_t j = i + 1;
    while (j < p.windows.size() && p.windows[j].subject == p.windows[i].subject &&
           p.windows[j].label == p.windows[i].label &&
           p.windows[j].start_row == p.windows[j - 1].start_row + cfg.window_stride) {
      ++j;
    }
    const std::size_t n = j - i;
    const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
    const std::size_t offset = n_test == 0 ? 0 : static_cast<std::size_t>(rng.below(n - n_test + 1));
    const std::size_t first = i + offset;
    const std::size_t test_begin = p.windows[first].start_row;
    const std::size_t test_end = n_test == 0 ? test_begin : p.windows[first + n_test - 1].start_row + cfg.window_len;
    for (std::size_t w = i; w < j; ++w) {
      WindowRef ref = p.windows[w];
      ref.test = w >= first && w < first + n_test;
      const bool overlaps = ref.start_row < test_end && ref.start_row + cfg.window_len > test_begin;
      if (ref.test || n_test == 0 || !overlaps) kept.push_back(ref);
    }
    i = j;
  }
  p.windows = std::move(kept);

  std::vector<std::string> selected;
  if (cfg.modality == ModalitySet::fused_all) {
    const FeatureRanking ranking = rank_features(p.training_rows(p.fnirs_features));
    selected = select_top_k(ranking, cfg.top_k);
  }
  p.model_features = model_columns(p, cfg.modality, selected);

  const FeatureMatrix train = p.training_rows(all);
  p.scaler = fit_scaler(train);
  for (auto& m : p.matrices) apply_scaler_inplace(m.values, m.n_features(), p.scaler);
  check_scaled(p);
  return p;
}

void check_scaled(const PreparedData& p) {
  std::vector<std::string> all = p.simulator_features;
  all.insert(all.end(), p.fnirs_features.begin(), p.fnirs_features.end());
  all.insert(all.end(), p.eye_features.begin(), p.eye_features.end());
  const FeatureMatrix train = p.training_rows(all);
  if (train.n_rows < 2) fail(ErrorCode::empty_matrix, "fewer than two training rows");
  const auto n = static_cast<double>(train.n_rows);
  for (std::size_t j = 0; j < train.n_features(); ++j) {
    if (p.scaler.constant[j]) continue;
    double sum = 0.0;
    for (std::size_t r = 0; r < train.n_rows; ++r) sum += train.at(r, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < train.n_rows; ++r) ss += (train.at(r, j) - mean) * (train.at(r, j) - mean);
    const double sd = std::sqrt(ss / n);
    if (!(std::abs(mean) < 1e-9) || !(std::abs(sd - 1.0) < 1e-6)) {
      fail(ErrorCode::dimension_mismatch, "scaled training column '" + all[j] + "' has mean " + format_double(mean) +
                                              " and std " + format_double(sd));
    }
  }
}

void write_prepared(const fs::path& dir, const PreparedData& p) {
  fs::create_directories(dir);
  std::vector<std::string> all = p.simulator_features;
  all.insert(all.end(), p.fnirs_features.begin(), p.fnirs_features.end());
  all.insert(all.end(), p.eye_features.begin(), p.eye_features.end());

  std::string features = "subject,row,label";
  for (const auto& f : all) features += "," + f;
  features += "\n";
  for (std::size_t s = 0; s < p.matrices.size(); ++s) {
    const auto& m = p.matrices[s];
    const auto idx = column_indices(m, all);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      features += p.subjects[s] + "," + std::to_string(r) + "," + label_text(m.labels[r]);
      for (auto j : idx) features += "," + format_double(m.at(r, j));
      features += "\n";
    }
  }
  write_text_file(dir / "features.csv", features);
  write_text_file(dir / "windows.csv", p.manifest_csv());

  std::string scaler = "feature,mean,std,constant\n";
  for (std::size_t j = 0; j < all.size(); ++j) {
    scaler += all[j] + "," + format_double(p.scaler.mean[j]) + "," + format_double(p.scaler.std[j]) + "," +
              (p.scaler.constant[j] ? "1" : "0") + "\n";
  }
  write_text_file(dir / "scaler.csv", scaler);

  const json meta{{"seed", p.seed},
                  {"test_fraction", p.test_fraction},
                  {"window_len", p.window_len},
                  {"stride", p.stride},
                  {"rate_hz", p.matrices.empty() ? 0.0 : p.matrices.front().rate_hz},
                  {"subjects", p.subjects},
                  {"simulator_features", p.simulator_features},
                  {"fnirs_features", p.fnirs_features},
                  {"eye_features", p.eye_features},
                  {"model_features", p.model_features},
                  {"split_fingerprint", hex64(p.fingerprint())}};
  write_text_file(dir / "prep.json", meta.dump(2) + "\n");
}

PreparedData read_prepared(const fs::path& dir) {
  PreparedData p;
  json meta;
  try {
    meta = json::parse(read_text_file(dir / "prep.json"));
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.test_fraction = meta.at("test_fraction").get<double>();
    p.window_len = meta.at("window_len").get<std::size_t>();
    p.stride = meta.at("stride").get<std::size_t>();
    p.subjects = meta.at("subjects").get<std::vector<std::string>>();
    p.simulator_features = meta.at("simulator_features").get<std::vector<std::string>>();
    p.fnirs_features = meta.at("fnirs_features").get<std::vector<std::string>>();
    p.eye_features = meta.at("eye_features").get<std::vector<std::string>>();
    p.model_features = meta.at("model_features").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, (dir / "prep.json").string() + ": " + e.what());
  }
  const double rate = meta.at("rate_hz").get<double>();

  std::map<std::string, std::size_t> subject_index;
  for (std::size_t s = 0; s < p.subjects.size(); ++s) subject_index[p.subjects[s]] = s;
  auto subject_of = [&](const std::string& name) {
    auto it = subject_index.find(name);
    if (it == subject_index.end()) fail(ErrorCode::parse_error, "unknown subject '" + name + "'");
    return it->second;
  };

  const CsvTable features = read_csv(dir / "features.csv");
  if (features.header.size() < 3) fail(ErrorCode::parse_error, "features.csv has no feature columns");
  const std::vector<std::string> names(features.header.begin() + 3, features.header.end());
  p.matrices.resize(p.subjects.size());
  for (auto& m : p.matrices) {
    m.feature_names = names;
    m.rate_hz = rate;
  }
  for (const auto& row : features.rows) {
    if (row.size() != features.header.size()) fail(ErrorCode::parse_error, "features.csv row has wrong width");
    auto& m = p.matrices[subject_of(row[0])];
    if (static_cast<std::size_t>(parse_int(row[1])) != m.n_rows) fail(ErrorCode::parse_error, "features.csv rows out of order");
    m.labels.push_back(label_from_text(row[2]));
    for (std::size_t j = 3; j < row.size(); ++j) m.values.push_back(parse_double(row[j]));
    ++m.n_rows;
  }

  const CsvTable scaler = read_csv(dir / "scaler.csv");
  for (const auto& row : scaler.rows) {
    p.scaler.mean.push_back(parse_double(row.at(1)));
    p.scaler.std.push_back(parse_double(row.at(2)));
    p.scaler.constant.push_back(row.at(3) == "1");
  }

  const CsvTable windows = read_csv(dir / "windows.csv");
  const auto c_subject = windows.column("subject");
  const auto c_start = windows.column("start_row");
  const auto c_label = windows.column("label");
  const auto c_split = windows.column("split");
  for (const auto& row : windows.rows) {
    WindowRef w;
    w.subject = subject_of(row.at(c_subject));
    w.start_row = static_cast<std::size_t>(parse_int(row.at(c_start)));
    const auto label = label_from_text(row.at(c_label));
    if (!label) fail(ErrorCode::parse_error, "window without a task label");
    w.label = *label;
    w.test = row.at(c_split) == "test";
    if (w.start_row + p.window_len > p.matrices[w.subject].n_rows) fail(ErrorCode::parse_error, "window exceeds matrix");
    p.windows.push_back(w);
  }

  if (hex64(p.fingerprint()) != meta.at("split_fingerprint").get<std::string>()) {
    fail(ErrorCode::split_mismatch, "windows.csv does not match the recorded split fingerprint");
  }
  return p;
}

nn::ModelConfig model_config(const ModelHyper& hyper, std::size_t n_features, std::size_t window_len) {
  nn::ModelConfig m = nn::default_model_config(n_features, window_len);
  m.conv1_channels = hyper.conv1_channels;
  m.conv2_channels = hyper.conv2_channels;
  m.kernel = hyper.kernel;
  m.padding = hyper.kernel / 2;
  m.pooling = hyper.pooling;
  m.lstm_hidden = hyper.lstm_hidden;
  m.lstm_layers = hyper.lstm_layers;
  m.peephole = hyper.peephole;
  m.fc1 = hyper.fc1;
  m.fc2 = hyper.fc2;
  m.validate();
  return m;
}

nn::TrainConfig train_config(const ModelHyper& hyper) {
  nn::TrainConfig tc;
  tc.epochs = hyper.epochs;
  tc.batch_size = hyper.batch_size;
  tc.adam.learning_rate = hyper.learning_rate;
  return tc;
}

std::vector<metrics::EvalReport> evaluate_models(const WindowedDataset& train, const WindowedDataset& test,
                                                 const nn::ModelParams& model, const BaselineHyper& hyper) {
  const auto truth = nn::labels_of(test);
  std::vector<metrics::EvalReport> reports;
  const nn::Prediction cnn = nn::predict(model, test);
  reports.push_back(metrics::evaluate("CNN-LSTM", truth, cnn.classes, cnn.probabilities));

  const auto flat_train = baselines::flatten(train);
  const auto flat_test = baselines::flatten(test);
  auto run = [&](const std::string& name, auto&& scorer) {
    std::vector<int> pred;
    std::vector<double> proba;
    for (std::size_t i = 0; i < flat_test.size(); ++i) {
      const auto [cls, scores] = scorer(flat_test.row(i));
      pred.push_back(cls);
      proba.insert(proba.end(), scores.begin(), scores.end());
    }
    reports.push_back(metrics::evaluate(name, truth, pred, proba));
  };

  const auto tree = baselines::decision_tree_fit(flat_train, hyper.tree_max_depth, hyper.tree_min_leaf);
  run("Decision trees", [&](std::span<const double> x) {
    return std::pair{baselines::decision_tree_predict(tree, x), baselines::decision_tree_predict_proba(tree, x)};
  });
  run("k-NN", [&](std::span<const double> x) {
    return std::pair{baselines::knn_predict(flat_train, x, hyper.knn_k),
                     baselines::knn_predict_proba(flat_train, x, hyper.knn_k)};
  });
  const auto nb = baselines::gaussian_nb_fit(flat_train, hyper.nb_var_floor);
  run("Naive Bayes", [&](std::span<const double> x) {
    auto proba = baselines::gaussian_nb_predict_proba(nb, x);
    return std::pair{argmax(proba), proba};
  });
  const auto nc = baselines::nearest_centroid_fit(flat_train);
  run("Nearest centroid", [&](std::span<const double> x) {
    return std::pair{baselines::nearest_centroid_predict(nc, x), baselines::nearest_centroid_scores(nc, x)};
  });
  return reports;
}

}  // namespace cogload
