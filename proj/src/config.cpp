#include "cogload/config.hpp"

#include <fstream>
#include <set>

#include "cogload/error.hpp"

namespace cogload {

using nlohmann::json;

std::string_view to_string(ModalitySet m) { return m == ModalitySet::fused_all ? "fused_all" : "simulator_only"; }

namespace {

// One JSON object; tracks which keys were consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::config_invalid, "'" + display() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      fail(ErrorCode::config_invalid, "key '" + path_ + key + "': " + e.what());
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + key + ".");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(ErrorCode::config_invalid, "unknown key '" + path_ + item.key() + "'");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_synthetic(Section& s, datagen::GenConfig& g) {
  s.get("n_subjects", g.n_subjects);
  s.get("n_trials", g.n_trials);
  s.get("baseline_s", g.baseline_s);
  s.get("simulator_rate_hz", g.simulator_rate_hz);
  s.get("fnirs_rate_hz", g.fnirs_rate_hz);
  s.get("eye_rate_hz", g.eye_rate_hz);
  s.get("fnirs_channels", g.fnirs_channels);
  s.get("significant_channels", g.significant_channels);
  s.get("target_rate", g.target_rate);
  s.get("response_accuracy", g.response_accuracy);
  s.get("speed_mean", g.speed_mean);
  s.get("speed_delta", g.speed_delta);
  s.get("fixation_mean", g.fixation_mean);
  s.get("fixation_delta", g.fixation_delta);
  s.get("hbo_delta", g.hbo_delta);
  s.get("hbr_ratio", g.hbr_ratio);
  s.get("hemo_time_constant_s", g.hemo_time_constant_s);
  s.get("ar_coefficient", g.ar_coefficient);
  s.get("simulator_noise", g.simulator_noise);
  s.get("fnirs_noise", g.fnirs_noise);
  s.get("eye_noise", g.eye_noise);
}

json synthetic_json(const ExperimentConfig& c) {
  const auto& g = c.synthetic;
  return json{{"preset", c.preset},
              {"n_subjects", g.n_subjects},
              {"n_trials", g.n_trials},
              {"baseline_s", g.baseline_s},
              {"simulator_rate_hz", g.simulator_rate_hz},
              {"fnirs_rate_hz", g.fnirs_rate_hz},
              {"eye_rate_hz", g.eye_rate_hz},
              {"fnirs_channels", g.fnirs_channels},
              {"significant_channels", g.significant_channels},
              {"target_rate", g.target_rate},
              {"response_accuracy", g.response_accuracy},
              {"speed_mean", g.speed_mean},
              {"speed_delta", g.speed_delta},
              {"fixation_mean", g.fixation_mean},
              {"fixation_delta", g.fixation_delta},
              {"hbo_delta", g.hbo_delta},
              {"hbr_ratio", g.hbr_ratio},
              {"hemo_time_constant_s", g.hemo_time_constant_s},
              {"ar_coefficient", g.ar_coefficient},
              {"simulator_noise", g.simulator_noise},
              {"fnirs_noise", g.fnirs_noise},
              {"eye_noise", g.eye_noise}};
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("schema_version", c.schema_version);
  if (c.schema_version != kConfigSchemaVersion) {
    fail(ErrorCode::config_invalid, "unsupported schema_version " + std::to_string(c.schema_version));
  }
  root.get("seed", c.seed);
  std::string modality(to_string(c.modality));
  root.get("modality", modality);
  if (modality == "fused_all") {
    c.modality = ModalitySet::fused_all;
  } else if (modality == "simulator_only") {
    c.modality = ModalitySet::simulator_only;
  } else {
    fail(ErrorCode::config_invalid, "key 'modality': unknown value '" + modality + "'");
  }

  if (auto s = root.sub("data")) {
    s->get("source", c.data_source);
    s->get("path", c.data_path);
    s->finish();
  }
  if (auto s = root.sub("synthetic")) {
    s->get("preset", c.preset);
    c.synthetic = datagen::preset(c.preset);
    read_synthetic(*s, c.synthetic);
    s->finish();
  }
  if (auto s = root.sub("mbll")) {
    std::array<std::array<double, 2>, 2> ext = c.geometry.extinction;
    s->get("extinction", ext);
    c.geometry.extinction = ext;
    s->get("path_length_cm", c.geometry.path_length_cm);
    s->get("dpf", c.geometry.dpf);
    s->get("output_scale", c.geometry.output_scale);
    s->get("det_tolerance", c.geometry.det_tolerance);
    int channels = c.geometry.channel_count;
    s->get("channel_count", channels);
    c.geometry.channel_count = channels;
    s->finish();
  }
  if (auto s = root.sub("fusion")) {
    if (s->has("target_rate_hz") && !j.at("fusion").at("target_rate_hz").is_null()) {
      double rate = 0.0;
      s->get("target_rate_hz", rate);
      c.fused_rate_hz = rate;
    } else {
      json dummy;
      s->get("target_rate_hz", dummy);
    }
    std::string method(to_string(c.downsample));
    s->get("downsample", method);
    c.downsample = downsample_method_from_string(method);
    s->finish();
  }
  if (auto s = root.sub("window")) {
    s->get("length", c.window_len);
    s->get("stride", c.window_stride);
    s->finish();
  }
  if (auto s = root.sub("selection")) {
    s->get("top_k", c.top_k);
    s->finish();
  }
  if (auto s = root.sub("split")) {
    s->get("test_fraction", c.test_fraction);
    s->finish();
  }
  if (auto s = root.sub("model")) {
    auto& m = c.model;
    s->get("epochs", m.epochs);
    s->get("batch_size", m.batch_size);
    s->get("learning_rate", m.learning_rate);
    s->get("conv1_channels", m.conv1_channels);
    s->get("conv2_channels", m.conv2_channels);
    s->get("kernel", m.kernel);
    s->get("lstm_hidden", m.lstm_hidden);
    s->get("lstm_layers", m.lstm_layers);
    s->get("fc1", m.fc1);
    s->get("fc2", m.fc2);
    s->get("peephole", m.peephole);
    s->get("pooling", m.pooling);
    s->finish();
  }
  if (auto s = root.sub("baselines")) {
    auto& b = c.baselines;
    s->get("knn_k", b.knn_k);
    s->get("tree_max_depth", b.tree_max_depth);
    s->get("tree_min_leaf", b.tree_min_leaf);
    s->get("nb_var_floor", b.nb_var_floor);
    s->finish();
  }
  root.finish();
  c.synthetic.geometry = c.geometry;
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  const auto& g = c.geometry;
  const auto& m = c.model;
  const auto& b = c.baselines;
  return json{
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"modality", to_string(c.modality)},
      {"data", {{"source", c.data_source}, {"path", c.data_path}}},
      {"synthetic", synthetic_json(c)},
      {"mbll",
       {{"extinction", g.extinction},
        {"path_length_cm", g.path_length_cm},
        {"dpf", g.dpf},
        {"output_scale", g.output_scale},
        {"det_tolerance", g.det_tolerance},
        {"channel_count", g.channel_count}}},
      {"fusion",
       {{"target_rate_hz", c.fused_rate_hz ? json(*c.fused_rate_hz) : json(nullptr)},
        {"downsample", to_string(c.downsample)}}},
      {"window", {{"length", c.window_len}, {"stride", c.window_stride}}},
      {"selection", {{"top_k", c.top_k}}},
      {"split", {{"test_fraction", c.test_fraction}}},
      {"model",
       {{"epochs", m.epochs},
        {"batch_size", m.batch_size},
        {"learning_rate", m.learning_rate},
        {"conv1_channels", m.conv1_channels},
        {"conv2_channels", m.conv2_channels},
        {"kernel", m.kernel},
        {"lstm_hidden", m.lstm_hidden},
        {"lstm_layers", m.lstm_layers},
        {"fc1", m.fc1},
        {"fc2", m.fc2},
        {"peephole", m.peephole},
        {"pooling", m.pooling}}},
      {"baselines",
       {{"knn_k", b.knn_k},
        {"tree_max_depth", b.tree_max_depth},
        {"tree_min_leaf", b.tree_min_leaf},
        {"nb_var_floor", b.nb_var_floor}}},
  };
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config_invalid, what);
  };
  require(c.data_source == "synthetic" || c.data_source == "files", "data.source must be 'synthetic' or 'files'");
  require(!c.fused_rate_hz || *c.fused_rate_hz > 0.0, "fusion.target_rate_hz must be positive");
  require(c.window_len >= 1 && c.window_stride >= 1, "window length and stride must be >= 1");
  require(c.top_k >= 1, "selection.top_k must be >= 1");
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "split.test_fraction must be in (0, 1)");
  require(c.model.batch_size >= 1, "model.batch_size must be >= 1");
  require(c.model.learning_rate > 0.0, "model.learning_rate must be positive");
  require(c.baselines.knn_k >= 1, "baselines.knn_k must be >= 1");
  require(c.baselines.nb_var_floor > 0.0, "baselines.nb_var_floor must be positive");
  try {
    cogload::validate(c.geometry);
  } catch (const Error& e) {
    fail(ErrorCode::config_invalid, std::string("mbll: ") + e.what());
  }
  datagen::validate(c.synthetic);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config_invalid, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace cogload
