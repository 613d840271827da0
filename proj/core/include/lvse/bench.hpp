#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvse/estimator.hpp"
#include "lvse/grid.hpp"
#include "lvse/metering.hpp"
#include "lvse/powerflow.hpp"

namespace lvse::bench {

/// Errors of one Monte Carlo iteration, one entry per estimated variable.
using ErrorSeries = std::vector<std::vector<double>>;

/// Mean over iterations of the largest absolute error.
double metric_avg_max_v(const ErrorSeries& errors);
/// Mean over iterations of the root mean square error.
double metric_avg_v(const ErrorSeries& errors);
double metric_avg_theta(const ErrorSeries& errors);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};
/// Per-iteration maxima / RMS values and their mean and sample standard deviation.
MetricStats max_stats(const ErrorSeries& errors);
MetricStats rms_stats(const ErrorSeries& errors);

/// Absolute magnitude and angle errors of an estimate against a power-flow truth,
/// over the phase conductors of every non-reference node. Angles are wrapped to (-pi, pi].
struct StateErrors {
  std::vector<double> vmag_pu;
  std::vector<double> theta_rad;
};
StateErrors state_errors(const se::EstimationResult& est, const pf::PowerFlowSolution& truth, const net::GridModel& g);

struct MonteCarloOptions {
  std::size_t iterations = 500;
  std::uint64_t master_seed = 1;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
  meter::MeterClasses classes = meter::default_meter_classes();
  double noise_scale = 1.0;
  se::EstimationConfig estimator;
  /// Largest fraction of failed iterations before the row fails.
  double max_failure_fraction = 0.1;
};

struct ReportRow {
  double loading = 0.0;
  double scale = 0.0;
  WiringMode mode = WiringMode::fourwire;
  std::size_t iterations = 0;
  std::size_t failed_iterations = 0;
  bool failed = false;
  std::string failure;
  MetricStats max_v;
  MetricStats avg_v;
  MetricStats avg_theta;
  double mean_estimator_iterations = 0.0;
  double mean_objective = 0.0;
  /// Measurements minus states plus constraints.
  double degrees_of_freedom = 0.0;
  /// Not reproducible; left out of the csv unless asked for.
  double mean_wall_ms = 0.0;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
};

/// Monte Carlo estimation of one scenario against a fixed truth. Iteration i
/// draws its noise from derive_seed(master_seed, i) whatever the thread count.
ReportRow run_monte_carlo(const net::GridModel& g, const pf::PowerFlowSolution& truth, WiringMode mode,
                          const MonteCarloOptions& options);

struct ScenarioSpec {
  std::string feeder;
  std::vector<double> loadings{0.25, 0.5, 0.75, 1.0};
  std::vector<double> scales{0.5, 1.0, 2.0, 5.0};
  double power_factor = 0.95;
  std::size_t monte_carlo = 500;
  std::uint64_t seed = 1;
  std::vector<WiringMode> modes{WiringMode::threewire, WiringMode::fourwire};
  net::LoadModel load_model = net::LoadModel::constant_power;

  void validate() const;
};

/// Parses the `[sweep]` section: loadings, scales, mc, seed, modes, pf, load_model, feeder.
ScenarioSpec parse_scenario_spec(std::string_view text, const std::string& file = "<spec>");
ScenarioSpec load_scenario_spec(const std::string& path);

/// Every loading x scale x mode cell in that order. `on_row` sees each row as it completes.
MetricsReport run_scenario_sweep(const net::GridModel& base, const ScenarioSpec& spec, MonteCarloOptions options,
                                 const std::function<void(const ReportRow&)>& on_row = {});

std::string_view mode_name(WiringMode m);
WiringMode mode_from_name(std::string_view s);

/// 100 (1 - N / C).
double improvement_percent(double conventional, double neutral);

std::string report_csv(const MetricsReport& report, bool include_timing = false);
std::string report_table(const MetricsReport& report);
/// One file per metric: `loading,scale,C,N` rows.
std::map<std::string, std::string> report_plotdata(const MetricsReport& report);

enum class ExportFormat { csv, table, plotdata };
ExportFormat export_format_from_name(std::string_view s);
/// Writes `report` to `path` (a directory for plotdata). Returns the files written.
std::vector<std::string> export_report(const MetricsReport& report, ExportFormat format, const std::string& path,
                                       bool include_timing = false);

}  // namespace lvse::bench
