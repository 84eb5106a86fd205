#pragma once

#include <string>

#include "cogload/featsel.hpp"
#include "cogload/metrics.hpp"

namespace cogload::svg {

inline constexpr int kCellPx = 16;

// One square cell per feature pair, diverging blue-white-red over [-1, 1].
std::string correlation_heatmap(const CorrelationMap& c);

// Rows are true classes, columns predicted; cell shade scales with the row share.
std::string confusion_matrix(const metrics::Confusion& c, const std::string& title);

}  // namespace cogload::svg
