#include "cogload/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cogload::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string rgb(double r, double g, double b) {
  auto c = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c(r), c(g), c(b));
  return buf;
}

std::string diverging(double v) {
  v = std::clamp(v, -1.0, 1.0);
  if (v >= 0) return rgb(1.0, 1.0 - v, 1.0 - v);
  return rgb(1.0 + v, 1.0 + v, 1.0);
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string correlation_heatmap(const CorrelationMap& c) {
  const std::size_t n = c.size();
  std::size_t label_len = 0;
  for (const auto& name : c.names) label_len = std::max(label_len, name.size());
  const int margin = static_cast<int>(label_len) * 7 + 8;
  const int side = static_cast<int>(n) * kCellPx;
  const int width = margin + side + 8;
  const int height = margin + side + 8;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" data-features=\"" + std::to_string(n) + "\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int y = margin + static_cast<int>(i) * kCellPx;
    out += "<text x=\"" + std::to_string(margin - 4) + "\" y=\"" + std::to_string(y + kCellPx - 4) +
           "\" text-anchor=\"end\">" + escape(c.names[i]) + "</text>\n";
    out += "<text transform=\"translate(" + std::to_string(y + kCellPx - 4) + "," + std::to_string(margin - 4) +
           ") rotate(-90)\">" + escape(c.names[i]) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out += "<rect class=\"cell\" x=\"" + std::to_string(margin + static_cast<int>(j) * kCellPx) + "\" y=\"" +
             std::to_string(margin + static_cast<int>(i) * kCellPx) + "\" width=\"" + std::to_string(kCellPx) +
             "\" height=\"" + std::to_string(kCellPx) + "\" fill=\"" + diverging(c.at(i, j)) + "\"><title>" +
             escape(c.names[i]) + " / " + escape(c.names[j]) + ": " + fixed(c.at(i, j), 3) + "</title></rect>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string confusion_matrix(const metrics::Confusion& c, const std::string& title) {
  constexpr int cell = 80;
  constexpr int left = 90;
  constexpr int top = 60;
  const int side = kNumClasses * cell;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(left + side + 20) +
                    "\" height=\"" + std::to_string(top + side + 50) + "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out += "<text x=\"" + std::to_string(left) + "\" y=\"20\" font-weight=\"bold\">" + escape(title) + "</text>\n";
  out += "<text x=\"" + std::to_string(left + side / 2) + "\" y=\"" + std::to_string(top + side + 40) +
         "\" text-anchor=\"middle\">predicted</text>\n";
  out += "<text transform=\"translate(16," + std::to_string(top + side / 2) + ") rotate(-90)\" text-anchor=\"middle\">true</text>\n";
  for (int k = 0; k < kNumClasses; ++k) {
    const std::string name(to_string(class_from_index(k)));
    out += "<text x=\"" + std::to_string(left + k * cell + cell / 2) + "\" y=\"" + std::to_string(top - 8) +
           "\" text-anchor=\"middle\">" + name + "</text>\n";
    out += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + std::to_string(top + k * cell + cell / 2 + 4) +
           "\" text-anchor=\"end\">" + name + "</text>\n";
  }
  for (int i = 0; i < kNumClasses; ++i) {
    std::size_t row_total = 0;
    for (int j = 0; j < kNumClasses; ++j) row_total += c[i][j];
    for (int j = 0; j < kNumClasses; ++j) {
      const double share = row_total == 0 ? 0.0 : static_cast<double>(c[i][j]) / static_cast<double>(row_total);
      const int x = left + j * cell;
      const int y = top + i * cell;
      out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(cell) +
             "\" height=\"" + std::to_string(cell) + "\" fill=\"" + rgb(1.0 - 0.8 * share, 1.0 - 0.55 * share, 1.0) +
             "\" stroke=\"#888\"/>\n";
      out += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 5) +
             "\" text-anchor=\"middle\" fill=\"" + (share > 0.6 ? "#fff" : "#000") + "\">" + std::to_string(c[i][j]) +
             "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace cogload::svg
