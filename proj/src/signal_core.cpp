#include "cogload/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cogload/error.hpp"

namespace cogload {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::simulator: return "simulator";
    case Modality::fnirs_od: return "fnirs_od";
    case Modality::fnirs_hb: return "fnirs_hb";
    case Modality::eye: return "eye";
  }
  return "unknown";
}

CognitiveClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) fail(ErrorCode::invalid_class, "class index " + std::to_string(index));
  return static_cast<CognitiveClass>(index);
}

std::string_view to_string(CognitiveClass c) {
  switch (c) {
    case CognitiveClass::zero_back: return "0back";
    case CognitiveClass::one_back: return "1back";
    case CognitiveClass::two_back: return "2back";
  }
  return "unknown";
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::baseline: return "baseline";
    case Condition::zero_back: return "0back";
    case Condition::one_back: return "1back";
    case Condition::two_back: return "2back";
  }
  return "unknown";
}

Condition condition_from_string(std::string_view text) {
  if (text == "baseline") return Condition::baseline;
  if (text == "0back") return Condition::zero_back;
  if (text == "1back") return Condition::one_back;
  if (text == "2back") return Condition::two_back;
  fail(ErrorCode::parse_error, "unknown condition '" + std::string(text) + "'");
}

std::optional<CognitiveClass> task_class(Condition c) {
  switch (c) {
    case Condition::zero_back: return CognitiveClass::zero_back;
    case Condition::one_back: return CognitiveClass::one_back;
    case Condition::two_back: return CognitiveClass::two_back;
    case Condition::baseline: break;
  }
  return std::nullopt;
}

Condition condition_of(CognitiveClass c) {
  switch (c) {
    case CognitiveClass::zero_back: return Condition::zero_back;
    case CognitiveClass::one_back: return Condition::one_back;
    case CognitiveClass::two_back: return Condition::two_back;
  }
  return Condition::baseline;
}

void validate(const ChannelSeries& s) {
  if (!(s.rate_hz > 0.0) || !std::isfinite(s.rate_hz)) {
    fail(ErrorCode::parse_error, "channel '" + s.name + "' has non-positive rate");
  }
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    if (!std::isfinite(s.samples[i])) {
      fail(ErrorCode::parse_error, "channel '" + s.name + "' sample " + std::to_string(i) + " is not finite");
    }
  }
}

const ChannelSeries* Recording::find(std::string_view name) const {
  for (const auto& ch : channels) {
    if (ch.name == name) return &ch;
  }
  return nullptr;
}

void validate(const Recording& rec) {
  for (std::size_t i = 0; i < rec.labels.size(); ++i) {
    const auto& iv = rec.labels[i];
    if (!(iv.end_s > iv.start_s)) fail(ErrorCode::parse_error, "label interval " + std::to_string(i) + " is empty");
    if (i > 0 && iv.start_s < rec.labels[i - 1].end_s) {
      fail(ErrorCode::parse_error, "label intervals overlap or are out of order at " + std::to_string(i));
    }
  }
  for (const auto& ch : rec.channels) {
    validate(ch);
    if (rec.labels.empty()) continue;
    const double tol = 1.0 / ch.rate_hz;
    if (ch.start_time_s > rec.labels.front().start_s + tol || ch.end_time_s() < rec.labels.back().end_s - tol) {
      fail(ErrorCode::parse_error, "channel '" + ch.name + "' does not cover the labelled span");
    }
  }
}

// ---------------------------------------------------------------------------

double MbllGeometry::determinant() const {
  return extinction[0][0] * extinction[1][1] - extinction[0][1] * extinction[1][0];
}

void validate(const MbllGeometry& g) {
  for (const auto& row : g.extinction) {
    for (double e : row) {
      if (!std::isfinite(e)) fail(ErrorCode::config_invalid, "extinction coefficient is not finite");
    }
  }
  if (!(g.path_length_cm > 0.0)) fail(ErrorCode::config_invalid, "path_length_cm must be positive");
  if (!(g.dpf[0] > 0.0) || !(g.dpf[1] > 0.0)) fail(ErrorCode::config_invalid, "dpf must be positive");
  if (!(g.output_scale > 0.0)) fail(ErrorCode::config_invalid, "output_scale must be positive");
  if (!(std::abs(g.determinant()) > g.det_tolerance)) {
    fail(ErrorCode::singular_extinction, "|det(extinction)| = " + std::to_string(std::abs(g.determinant())) +
                                             " is not above tolerance");
  }
}

MbllGeometry example_geometry() {
  MbllGeometry g;
  // Arbitrary well-conditioned values for exercising the solver; not tissue constants.
  g.extinction = {{{0.75, 1.10}, {1.15, 0.78}}};
  g.path_length_cm = 1.5;
  g.dpf = {6.0, 5.5};
  g.output_scale = 1000.0;
  return g;
}

HbSample mbll_invert(double od_780, double od_850, const MbllGeometry& g) {
  const auto& e = g.extinction;
  const double b0 = od_780 / (g.path_length_cm * g.dpf[0]);
  const double b1 = od_850 / (g.path_length_cm * g.dpf[1]);
  const double det = g.determinant();
  if (!(std::abs(det) > g.det_tolerance)) {
    fail(ErrorCode::singular_extinction, "|det(extinction)| = " + std::to_string(std::abs(det)) +
                                             " is not above tolerance");
  }
  HbSample out;
  out.hbo2 = (b0 * e[1][1] - e[0][1] * b1) / det * g.output_scale;
  out.hbr = (e[0][0] * b1 - e[1][0] * b0) / det * g.output_scale;
  return out;
}

std::array<double, 2> mbll_forward(HbSample conc, const MbllGeometry& g) {
  const auto& e = g.extinction;
  const double hbo = conc.hbo2 / g.output_scale;
  const double hbr = conc.hbr / g.output_scale;
  return {(e[0][0] * hbo + e[0][1] * hbr) * g.path_length_cm * g.dpf[0],
          (e[1][0] * hbo + e[1][1] * hbr) * g.path_length_cm * g.dpf[1]};
}

std::vector<HbSample> mbll_convert(std::span<const OdPair> od, const MbllGeometry& g) {
  validate(g);
  std::vector<HbSample> out;
  out.reserve(od.size());
  for (const auto& p : od) {
    if (g.channel_count > 0 && (p.channel_id < 0 || p.channel_id >= g.channel_count)) {
      fail(ErrorCode::dimension_mismatch, "channel_id " + std::to_string(p.channel_id) + " out of range");
    }
    out.push_back(mbll_invert(p.od_780, p.od_850, g));
  }
  return out;
}

HbSeriesPair mbll_convert(const ChannelSeries& od_780, const ChannelSeries& od_850, const MbllGeometry& g,
                          std::string_view base_name) {
  validate(g);
  if (od_780.samples.size() != od_850.samples.size()) {
    fail(ErrorCode::length_mismatch, "wavelength series for '" + std::string(base_name) + "' differ in length");
  }
  HbSeriesPair out;
  for (auto* s : {&out.hbo2, &out.hbr}) {
    s->modality = Modality::fnirs_hb;
    s->rate_hz = od_780.rate_hz;
    s->start_time_s = od_780.start_time_s;
    s->samples.resize(od_780.samples.size());
  }
  out.hbo2.name = std::string(base_name) + "_hbo";
  out.hbr.name = std::string(base_name) + "_hbr";
  for (std::size_t i = 0; i < od_780.samples.size(); ++i) {
    const auto hb = mbll_invert(od_780.samples[i], od_850.samples[i], g);
    out.hbo2.samples[i] = hb.hbo2;
    out.hbr.samples[i] = hb.hbr;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, c);
  return out;
}

std::optional<std::size_t> FeatureMatrix::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  return std::nullopt;
}

void FeatureMatrix::check_shape() const {
  if (values.size() != n_rows * n_features()) fail(ErrorCode::dimension_mismatch, "values size != rows * features");
  if (labels.size() != n_rows) fail(ErrorCode::dimension_mismatch, "labels size != rows");
}

FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::string> names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto i = m.index_of(n);
    if (!i) fail(ErrorCode::dimension_mismatch, "unknown feature '" + n + "'");
    idx.push_back(*i);
  }
  FeatureMatrix out;
  out.feature_names.assign(names.begin(), names.end());
  out.n_rows = m.n_rows;
  out.labels = m.labels;
  out.rate_hz = m.rate_hz;
  out.values.resize(m.n_rows * idx.size());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) out.values[r * idx.size() + j] = m.at(r, idx[j]);
  }
  return out;
}

ScalerParams fit_scaler(std::span<const double> row_major, std::size_t n_rows, std::size_t n_features) {
  if (n_rows < 2) fail(ErrorCode::empty_matrix, "scaler needs at least 2 rows");
  if (row_major.size() != n_rows * n_features) fail(ErrorCode::dimension_mismatch, "matrix size mismatch");
  ScalerParams p;
  p.mean.assign(n_features, 0.0);
  p.std.assign(n_features, 0.0);
  p.constant.assign(n_features, false);
  const double n = static_cast<double>(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t j = 0; j < n_features; ++j) p.mean[j] += row_major[r * n_features + j];
  }
  for (auto& m : p.mean) m /= n;
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t j = 0; j < n_features; ++j) {
      const double d = row_major[r * n_features + j] - p.mean[j];
      p.std[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < n_features; ++j) {
    p.std[j] = std::sqrt(p.std[j] / n);
    p.constant[j] = p.std[j] < kConstantStdEpsilon;
  }
  return p;
}

ScalerParams fit_scaler(const FeatureMatrix& m) {
  m.check_shape();
  return fit_scaler(m.values, m.n_rows, m.n_features());
}

void apply_scaler_inplace(std::span<double> row_major, std::size_t n_features, const ScalerParams& p) {
  if (p.size() != n_features || (n_features > 0 && row_major.size() % n_features != 0)) {
    fail(ErrorCode::dimension_mismatch, "scaler has " + std::to_string(p.size()) + " features, matrix has " +
                                            std::to_string(n_features));
  }
  for (std::size_t i = 0; i < row_major.size(); ++i) {
    const std::size_t j = i % n_features;
    row_major[i] = p.constant[j] ? 0.0 : (row_major[i] - p.mean[j]) / p.std[j];
  }
}

FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerParams& p) {
  m.check_shape();
  FeatureMatrix out = m;
  apply_scaler_inplace(out.values, m.n_features(), p);
  return out;
}

// ---------------------------------------------------------------------------

DownsampleMethod downsample_method_from_string(std::string_view text) {
  if (text == "mean") return DownsampleMethod::mean;
  if (text == "decimate") return DownsampleMethod::decimate;
  fail(ErrorCode::config_invalid, "unknown downsample method '" + std::string(text) + "'");
}

std::string_view to_string(DownsampleMethod m) { return m == DownsampleMethod::mean ? "mean" : "decimate"; }

ChannelSeries downsample(const ChannelSeries& s, int factor, DownsampleMethod method) {
  if (factor < 1) fail(ErrorCode::rate_incompatible, "downsample factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  if (s.samples.size() < f || s.samples.empty()) {
    fail(ErrorCode::empty_series, "series '" + s.name + "' shorter than factor " + std::to_string(factor));
  }
  ChannelSeries out;
  out.name = s.name;
  out.modality = s.modality;
  out.rate_hz = s.rate_hz / factor;
  out.start_time_s = s.start_time_s;
  if (method == DownsampleMethod::mean) {
    const std::size_t n_out = s.samples.size() / f;
    out.samples.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < f; ++i) sum += s.samples[k * f + i];
      out.samples[k] = sum / static_cast<double>(f);
    }
  } else {
    for (std::size_t i = 0; i < s.samples.size(); i += f) out.samples.push_back(s.samples[i]);
  }
  return out;
}

FeatureMatrix align_and_fuse(const Recording& rec, double target_rate_hz, std::span<const std::string> selected,
                             DownsampleMethod method) {
  if (!(target_rate_hz > 0.0)) fail(ErrorCode::rate_incompatible, "target rate must be positive");
  if (selected.empty()) fail(ErrorCode::dimension_mismatch, "no features selected");

  std::vector<ChannelSeries> resampled;
  resampled.reserve(selected.size());
  for (const auto& name : selected) {
    const ChannelSeries* ch = rec.find(name);
    if (ch == nullptr) fail(ErrorCode::dimension_mismatch, "recording has no channel '" + name + "'");
    const double ratio = ch->rate_hz / target_rate_hz;
    const double factor = std::round(ratio);
    if (factor < 1.0 || std::abs(ratio - factor) > 1e-9 * ratio) {
      fail(ErrorCode::rate_incompatible, "channel '" + name + "' at " + std::to_string(ch->rate_hz) +
                                             " Hz is not an integer multiple of " + std::to_string(target_rate_hz));
    }
    resampled.push_back(downsample(*ch, static_cast<int>(factor), method));
    resampled.back().rate_hz = target_rate_hz;
  }

  double start = resampled.front().start_time_s;
  double end = resampled.front().end_time_s();
  for (const auto& s : resampled) {
    start = std::max(start, s.start_time_s);
    end = std::min(end, s.end_time_s());
  }
  if (!(end > start)) fail(ErrorCode::no_overlap, "channel time spans are disjoint");

  // Channels are aligned to the nearest target-rate sample of the common start.
  auto n_rows = static_cast<std::size_t>(std::floor((end - start) * target_rate_hz + 1e-9));
  std::vector<std::size_t> offsets;
  for (const auto& s : resampled) {
    const auto off = static_cast<std::size_t>(std::llround((start - s.start_time_s) * target_rate_hz));
    offsets.push_back(off);
    n_rows = std::min(n_rows, s.samples.size() > off ? s.samples.size() - off : 0);
  }
  if (n_rows == 0) fail(ErrorCode::no_overlap, "common span shorter than one fused sample");

  FeatureMatrix m;
  m.feature_names.assign(selected.begin(), selected.end());
  m.n_rows = n_rows;
  m.rate_hz = target_rate_hz;
  m.values.resize(n_rows * selected.size());
  for (std::size_t j = 0; j < resampled.size(); ++j) {
    for (std::size_t r = 0; r < n_rows; ++r) m.values[r * selected.size() + j] = resampled[j].samples[offsets[j] + r];
  }
  m.labels.resize(n_rows);
  std::size_t iv = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    // Each fused sample is labelled by the interval containing its midpoint.
    const double t = start + (static_cast<double>(r) + 0.5) / target_rate_hz;
    while (iv < rec.labels.size() && rec.labels[iv].end_s <= t) ++iv;
    if (iv < rec.labels.size() && rec.labels[iv].start_s <= t) m.labels[r] = task_class(rec.labels[iv].condition);
  }
  return m;
}

std::array<std::size_t, kNumClasses> WindowedDataset::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& w : windows) ++counts[static_cast<std::size_t>(index_of(w.label))];
  return counts;
}

WindowedDataset segment_windows(const FeatureMatrix& m, std::size_t window_len, std::size_t stride) {
  m.check_shape();
  if (window_len < 1 || stride < 1) fail(ErrorCode::dimension_mismatch, "window length and stride must be >= 1");
  if (m.n_rows < window_len) fail(ErrorCode::window_too_long, "matrix has fewer rows than the window length");

  WindowedDataset ds;
  ds.window_len = window_len;
  ds.stride = stride;
  ds.n_features = m.n_features();
  ds.feature_names = m.feature_names;
  const std::size_t nf = m.n_features();

  std::size_t r = 0;
  while (r < m.n_rows) {
    if (!m.labels[r]) {
      ++r;
      continue;
    }
    std::size_t run_end = r;
    while (run_end < m.n_rows && m.labels[run_end] == m.labels[r]) ++run_end;
    const std::size_t len = run_end - r;
    if (len < window_len) {
      fail(ErrorCode::window_too_long, "label interval of " + std::to_string(len) + " samples at row " +
                                           std::to_string(r) + " is shorter than " + std::to_string(window_len));
    }
    for (std::size_t off = r; off + window_len <= run_end; off += stride) {
      Window w;
      w.start_row = off;
      w.label = *m.labels[r];
      w.values.assign(m.values.begin() + static_cast<std::ptrdiff_t>(off * nf),
                      m.values.begin() + static_cast<std::ptrdiff_t>((off + window_len) * nf));
      ds.windows.push_back(std::move(w));
    }
    r = run_end;
  }
  return ds;
}

void append(WindowedDataset& into, const WindowedDataset& more) {
  if (into.windows.empty() && into.n_features == 0) {
    into = more;
    return;
  }
  if (into.window_len != more.window_len || into.n_features != more.n_features) {
    fail(ErrorCode::dimension_mismatch, "cannot append datasets with different window shapes");
  }
  into.windows.insert(into.windows.end(), more.windows.begin(), more.windows.end());
}

}  // namespace cogload
