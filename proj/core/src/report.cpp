#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"

namespace lvse::bench {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_rows(const MetricsReport& r) {
  if (r.rows.empty()) throw DomainError("report has no rows");
}

struct Metric {
  const char* name;
  double (*get)(const ReportRow&);
};

const Metric kMetrics[] = {
    {"max_v", [](const ReportRow& r) { return r.max_v.mean; }},
    {"avg_v", [](const ReportRow& r) { return r.avg_v.mean; }},
    {"avg_theta", [](const ReportRow& r) { return r.avg_theta.mean; }},
};

const ReportRow* find_row(const MetricsReport& r, double loading, double scale, WiringMode mode) {
  for (const auto& row : r.rows)
    if (row.loading == loading && row.scale == scale && row.mode == mode && !row.failed) return &row;
  return nullptr;
}

}  // namespace

std::string report_csv(const MetricsReport& report, bool include_timing) {
  require_rows(report);
  std::ostringstream os;
  os << "loading,scale,mode,mc,failed_iterations,failed,max_v_pu,max_v_std,avg_v_pu,avg_v_std,avg_theta_rad,"
        "avg_theta_std,mean_iterations,mean_objective,dof";
  if (include_timing) os << ",mean_wall_ms";
  os << "\n";
  for (const auto& r : report.rows) {
    os << num(r.loading) << "," << num(r.scale) << "," << mode_name(r.mode) << "," << r.iterations << ","
       << r.failed_iterations << "," << (r.failed ? 1 : 0);
    const double values[] = {r.max_v.mean,   r.max_v.stddev,   r.avg_v.mean,
                             r.avg_v.stddev, r.avg_theta.mean, r.avg_theta.stddev,
                             r.mean_estimator_iterations, r.mean_objective, r.degrees_of_freedom};
    for (double v : values) os << "," << (r.failed ? "nan" : num(v));
    if (include_timing) os << "," << (r.failed ? "nan" : num(r.mean_wall_ms));
    os << "\n";
  }
  return os.str();
}

std::string report_table(const MetricsReport& report) {
  require_rows(report);
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%7s %6s %4s %12s %12s %12s %6s %5s\n", "loading", "scale", "mode", "max|dV| pu",
                "avg|dV| pu", "avg|dth| rad", "iters", "fail");
  os << line;
  for (const auto& r : report.rows) {
    if (r.failed) {
      std::snprintf(line, sizeof line, "%7.2f %6.2f %4s  FAILED: ", r.loading, r.scale, mode_name(r.mode).data());
      os << line << r.failure << "\n";
      continue;
    }
    std::snprintf(line, sizeof line, "%7.2f %6.2f %4s %12.4e %12.4e %12.4e %6.2f %5zu\n", r.loading, r.scale,
                  mode_name(r.mode).data(), r.max_v.mean, r.avg_v.mean, r.avg_theta.mean,
                  r.mean_estimator_iterations, r.failed_iterations);
    os << line;
    if (r.mode != WiringMode::fourwire) continue;
    const ReportRow* c = find_row(report, r.loading, r.scale, WiringMode::threewire);
    if (!c) continue;
    os << "               N vs C";
    for (const auto& m : kMetrics) {
      const double cv = m.get(*c);
      if (cv > 0.0) {
        std::snprintf(line, sizeof line, " %11.1f%%", improvement_percent(cv, m.get(r)));
        os << line;
      } else {
        os << "          n/a";
      }
    }
    os << "\n";
  }
  return os.str();
}

std::map<std::string, std::string> report_plotdata(const MetricsReport& report) {
  require_rows(report);
  std::map<std::string, std::string> files;
  for (const auto& m : kMetrics) {
    std::ostringstream os;
    os << "loading,scale,C,N\n";
    std::vector<std::pair<double, double>> cells;
    for (const auto& r : report.rows)
      if (std::find(cells.begin(), cells.end(), std::pair{r.loading, r.scale}) == cells.end())
        cells.emplace_back(r.loading, r.scale);
    for (const auto& [l, s] : cells) {
      const ReportRow* c = find_row(report, l, s, WiringMode::threewire);
      const ReportRow* n = find_row(report, l, s, WiringMode::fourwire);
      os << num(l) << "," << num(s) << "," << (c ? num(m.get(*c)) : "nan") << "," << (n ? num(m.get(*n)) : "nan")
         << "\n";
    }
    files[std::string(m.name) + ".csv"] = os.str();
  }
  return files;
}

ExportFormat export_format_from_name(std::string_view s) {
  if (s == "csv") return ExportFormat::csv;
  if (s == "table") return ExportFormat::table;
  if (s == "plotdata") return ExportFormat::plotdata;
  throw DomainError("unknown report format '" + std::string(s) + "'");
}

std::vector<std::string> export_report(const MetricsReport& report, ExportFormat format, const std::string& path,
                                       bool include_timing) {
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw Error("write to '" + p.string() + "' failed");
    return p.string();
  };
  switch (format) {
    case ExportFormat::csv: return {write(path, report_csv(report, include_timing))};
    case ExportFormat::table: return {write(path, report_table(report))};
    case ExportFormat::plotdata: {
      const auto files = report_plotdata(report);
      std::error_code ec;
      std::filesystem::create_directories(path, ec);
      if (ec) throw Error("cannot create '" + path + "': " + ec.message());
      std::vector<std::string> written;
      for (const auto& [name, text] : files) written.push_back(write(std::filesystem::path(path) / name, text));
      return written;
    }
  }
  return {};
}

}  // namespace lvse::bench
