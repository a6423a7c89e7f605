#pragma once

// Trace serialization. Numbers are written with 17 significant digits so
// every double survives a text round trip; files are UTF-8 with LF endings.

#include <string>
#include <utility>
#include <vector>

#include "home/hippa.hpp"

namespace home {

/// 17 significant digits; NaN and infinities as nan, inf and -inf.
std::string format_double(double value);

/// One row of a per-method trace file.
struct TraceRow {
  IterateTrace iterate;
  double recovery_error = 0.0;
};

using MethodTrace = std::pair<std::string, std::vector<TraceRow>>;

/// Header: k,residual_norm,objective_value,envelope_value_inexact,
/// backtracks,sigma_k,elapsed_seconds,recovery_error
std::string trace_csv(const std::vector<TraceRow>& rows);

/// Metric names accepted by plot_data_csv.
const std::vector<std::string>& plot_metrics();

/// Long format: method,k,metric,value with one row per (method, k, metric),
/// methods in input order, then k, then metric.
std::string plot_data_csv(const std::vector<MethodTrace>& traces,
                          const std::vector<std::string>& metrics = {"residual_norm",
                                                                     "objective_value"});

/// Writes `content` to `path` via a temporary sibling and a rename, so
/// readers never observe a partial file. Throws IoFailure on I/O errors.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace home
