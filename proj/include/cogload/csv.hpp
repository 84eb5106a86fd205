#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogload/signal_core.hpp"

namespace cogload {

// Shortest text that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws parse_error when absent
};

// Lines beginning with '#' and blank lines are skipped.
CsvTable read_csv(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// Modality CSV: header `t,<channel>...`; t strictly increasing and uniformly spaced.
std::vector<ChannelSeries> read_series_csv(const std::filesystem::path& path, Modality modality);
std::string series_csv(std::span<const ChannelSeries> channels);

// Labels CSV: header `start_s,end_s,class`, class in {baseline,0back,1back,2back}.
std::vector<LabelInterval> read_labels_csv(const std::filesystem::path& path);
std::string labels_csv(std::span<const LabelInterval> labels);

}  // namespace cogload
