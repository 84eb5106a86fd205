#include "cogload/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cogload/error.hpp"

namespace cogload {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::parse_error, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text) {
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::parse_error, "not an integer: '" + std::string(text) + "'");
  }
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::parse_error, "missing column '" + std::string(name) + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorCode::parse_error, path.string() + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                                       std::to_string(fields.size()) + " fields, expected " +
                                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorCode::parse_error, path.string() + ": missing header row");
  return table;
}

std::vector<ChannelSeries> read_series_csv(const std::filesystem::path& path, Modality modality) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "t") {
    fail(ErrorCode::parse_error, path.string() + ": first column must be 't'");
  }
  const std::size_t n = table.rows.size();
  if (n < 2) fail(ErrorCode::empty_series, path.string() + ": need at least two samples");

  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = parse_double(table.rows[i][0]);
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) fail(ErrorCode::parse_error, path.string() + ": t is not strictly increasing");
  }
  double rate = static_cast<double>(n - 1) / (t.back() - t.front());
  if (std::abs(rate - std::round(rate)) < 1e-6 * rate) rate = std::round(rate);
  const double dt = 1.0 / rate;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-3 * dt) {
      fail(ErrorCode::parse_error, path.string() + ": non-uniform sampling at row " + std::to_string(i));
    }
  }

  std::vector<ChannelSeries> out;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    ChannelSeries s;
    s.name = table.header[c];
    s.modality = modality;
    s.rate_hz = rate;
    s.start_time_s = t.front();
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.samples[i] = parse_double(table.rows[i][c]);
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::string series_csv(std::span<const ChannelSeries> channels) {
  if (channels.empty()) fail(ErrorCode::empty_series, "no channels to write");
  const auto& first = channels.front();
  for (const auto& ch : channels) {
    if (ch.samples.size() != first.samples.size() || ch.rate_hz != first.rate_hz ||
        ch.start_time_s != first.start_time_s) {
      fail(ErrorCode::length_mismatch, "channels in one CSV must share rate, start and length");
    }
  }
  std::string out = "t";
  for (const auto& ch : channels) out += "," + ch.name;
  out += '\n';
  for (std::size_t i = 0; i < first.samples.size(); ++i) {
    out += format_double(first.start_time_s + static_cast<double>(i) / first.rate_hz);
    for (const auto& ch : channels) {
      out += ',';
      out += format_double(ch.samples[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<LabelInterval> read_labels_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto c_start = table.column("start_s");
  const auto c_end = table.column("end_s");
  const auto c_class = table.column("class");
  std::vector<LabelInterval> out;
  for (const auto& row : table.rows) {
    out.push_back({parse_double(row[c_start]), parse_double(row[c_end]), condition_from_string(row[c_class])});
  }
  return out;
}

std::string labels_csv(std::span<const LabelInterval> labels) {
  std::string out = "start_s,end_s,class\n";
  for (const auto& iv : labels) {
    out += format_double(iv.start_s) + "," + format_double(iv.end_s) + "," + std::string(to_string(iv.condition)) + "\n";
  }
  return out;
}

}  // namespace cogload
