#pragma once

#include <string>

#include "chipcost/cost_engine.hpp"

namespace chipcost {

/// "%.9g", with "inf" / "-inf" / "nan" spelled out.
std::string FormatNumber(double value);

/// Full report as JSON with keys in sorted order. Infinite values are written
/// as the string "inf".
std::string ReportToJson(const CostReport& report);

/// One row per chip, pre-order, preceded by a schema comment line.
std::string ReportToCsv(const CostReport& report);

}  // namespace chipcost
