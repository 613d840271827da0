#include <algorithm>
#include <cmath>
#include <numbers>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"

namespace lvse::bench {
namespace {

void require_data(const ErrorSeries& e) {
  if (e.empty()) throw DomainError("metric needs at least one iteration");
  for (const auto& it : e)
    if (it.empty()) throw DomainError("metric iteration holds no errors");
}

double iteration_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double iteration_rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s) / std::sqrt(static_cast<double>(v.size()));
}

MetricStats stats_of(const ErrorSeries& e, double (*f)(const std::vector<double>&)) {
  require_data(e);
  std::vector<double> vals;
  vals.reserve(e.size());
  for (const auto& it : e) vals.push_back(f(it));
  MetricStats s;
  for (double v : vals) s.mean += v;
  s.mean /= static_cast<double>(vals.size());
  if (vals.size() > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
  }
  return s;
}

}  // namespace

double metric_avg_max_v(const ErrorSeries& errors) { return stats_of(errors, iteration_max).mean; }
double metric_avg_v(const ErrorSeries& errors) { return stats_of(errors, iteration_rms).mean; }
double metric_avg_theta(const ErrorSeries& errors) { return stats_of(errors, iteration_rms).mean; }
MetricStats max_stats(const ErrorSeries& errors) { return stats_of(errors, iteration_max); }
MetricStats rms_stats(const ErrorSeries& errors) { return stats_of(errors, iteration_rms); }

StateErrors state_errors(const se::EstimationResult& est, const pf::PowerFlowSolution& truth,
                         const net::GridModel& g) {
  if (est.voltages.size() != g.node_count() || truth.voltages.size() != g.node_count())
    throw DomainError("estimate and truth do not match the grid");
  const double vbase = g.require_transformer().model.phase_base_v();
  StateErrors out;
  for (std::size_t u : g.preorder()) {
    for (Phase p : g.node(u).phases.without_neutral().members()) {
      const Complex e = est.voltage(u, p);
      const Complex t = truth.voltage(u, p) / vbase;
      out.vmag_pu.push_back(std::abs(std::abs(e) - std::abs(t)));
      out.theta_rad.push_back(std::abs(std::remainder(std::arg(e) - std::arg(t), 2.0 * std::numbers::pi)));
    }
  }
  return out;
}

double improvement_percent(double conventional, double neutral) {
  if (!(conventional > 0.0)) throw DomainError("improvement needs a positive conventional error");
  return 100.0 * (1.0 - neutral / conventional);
}

}  // namespace lvse::bench
