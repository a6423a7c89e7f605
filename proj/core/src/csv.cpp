#include "home/csv.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <system_error>

namespace home {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double metric_value(const TraceRow& row, const std::string& metric) {
  const IterateTrace& it = row.iterate;
  if (metric == "residual_norm") return it.residual_norm;
  if (metric == "objective_value") return it.objective_value;
  if (metric == "envelope_value_inexact") return it.envelope_value_inexact;
  if (metric == "backtracks") return it.backtracks;
  if (metric == "sigma_k") return it.sigma_k;
  if (metric == "elapsed_seconds") return it.elapsed_seconds;
  if (metric == "recovery_error") return row.recovery_error;
  throw InvalidArgument("unknown plot metric '" + metric + "'");
}

}  // namespace

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out =
      "k,residual_norm,objective_value,envelope_value_inexact,backtracks,sigma_k,"
      "elapsed_seconds,recovery_error\n";
  for (const TraceRow& row : rows) {
    const IterateTrace& it = row.iterate;
    out += std::to_string(it.k);
    for (double v : {it.residual_norm, it.objective_value, it.envelope_value_inexact}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(it.backtracks);
    for (double v : {it.sigma_k, it.elapsed_seconds, row.recovery_error}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& plot_metrics() {
  static const std::vector<std::string> names = {
      "residual_norm", "objective_value", "envelope_value_inexact", "backtracks",
      "sigma_k",       "elapsed_seconds", "recovery_error"};
  return names;
}

std::string plot_data_csv(const std::vector<MethodTrace>& traces,
                          const std::vector<std::string>& metrics) {
  for (const auto& m : metrics) {
    if (std::find(plot_metrics().begin(), plot_metrics().end(), m) == plot_metrics().end()) {
      throw InvalidArgument("unknown plot metric '" + m + "'");
    }
  }
  std::string out = "method,k,metric,value\n";
  for (const auto& [method, rows] : traces) {
    for (const TraceRow& row : rows) {
      for (const auto& metric : metrics) {
        out += method;
        out += ',';
        out += std::to_string(row.iterate.k);
        out += ',';
        out += metric;
        out += ',';
        out += format_double(metric_value(row, metric));
        out += '\n';
      }
    }
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoFailure("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoFailure("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

}  // namespace home
