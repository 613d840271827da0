#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"

namespace lvse::bench {
namespace {

struct IterationOutcome {
  bool ok = false;
  StateErrors errors;
  int estimator_iterations = 0;
  double objective = 0.0;
  double dof = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

IterationOutcome run_iteration(const net::GridModel& g, const pf::PowerFlowSolution& truth, WiringMode mode,
                               const MonteCarloOptions& o, std::size_t i) {
  IterationOutcome out;
  try {
    const auto ms = meter::simulate_measurements(truth, g, o.classes, meter::derive_seed(o.master_seed, i),
                                                 o.noise_scale);
    auto cfg = o.estimator;
    cfg.mode = mode;
    cfg.allow_unconverged = true;
    const auto est = se::run_estimator(g, ms, cfg);
    out.estimator_iterations = est.iterations;
    out.wall_ms = est.wall_ms;
    if (!est.converged) {
      out.error = "not converged";
      return out;
    }
    out.errors = state_errors(est, truth, g);
    out.objective = est.objective;
    out.dof = static_cast<double>(est.measurement_count) - static_cast<double>(est.state_count) +
              static_cast<double>(est.constraint_count);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

ReportRow run_monte_carlo(const net::GridModel& g, const pf::PowerFlowSolution& truth, WiringMode mode,
                          const MonteCarloOptions& options) {
  if (options.iterations < 1) throw DomainError("Monte Carlo needs at least one iteration");
  if (!truth.converged) throw ModelError("Monte Carlo truth is not converged");

  const std::size_t n = options.iterations;
  std::vector<IterationOutcome> outcomes(n);
  unsigned workers = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) outcomes[i] = run_iteration(g, truth, mode, options, i);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  ReportRow row;
  row.mode = mode;
  row.iterations = n;
  ErrorSeries vm, th;
  double iters = 0.0, obj = 0.0, dof = 0.0, wall = 0.0;
  for (const auto& o : outcomes) {
    wall += o.wall_ms;
    if (!o.ok) {
      ++row.failed_iterations;
      if (row.failure.empty()) row.failure = o.error;
      continue;
    }
    vm.push_back(o.errors.vmag_pu);
    th.push_back(o.errors.theta_rad);
    iters += o.estimator_iterations;
    obj += o.objective;
    dof += o.dof;
  }
  row.mean_wall_ms = wall / static_cast<double>(n);
  const double failed_fraction = static_cast<double>(row.failed_iterations) / static_cast<double>(n);
  if (vm.empty() || failed_fraction > options.max_failure_fraction) {
    row.failed = true;
    row.failure = std::to_string(row.failed_iterations) + " of " + std::to_string(n) +
                  " iterations failed (first: " + row.failure + ")";
    if (vm.empty()) return row;
  }
  const double k = static_cast<double>(vm.size());
  row.max_v = max_stats(vm);
  row.avg_v = rms_stats(vm);
  row.avg_theta = rms_stats(th);
  row.mean_estimator_iterations = iters / k;
  row.mean_objective = obj / k;
  row.degrees_of_freedom = dof / k;
  return row;
}

MetricsReport run_scenario_sweep(const net::GridModel& base, const ScenarioSpec& spec, MonteCarloOptions options,
                                 const std::function<void(const ReportRow&)>& on_row) {
  spec.validate();
  options.iterations = spec.monte_carlo;
  options.master_seed = spec.seed;
  MetricsReport report;
  for (double loading : spec.loadings) {
    for (double scale : spec.scales) {
      std::optional<net::GridModel> g;
      std::optional<pf::PowerFlowSolution> truth;
      std::string failure;
      try {
        g = net::with_load_model(net::apply_scenario(base, loading, spec.power_factor, scale), spec.load_model);
        pf::PowerFlowOptions po;
        po.mode = WiringMode::fourwire;
        po.tolerance_pu = 1e-10;
        po.max_iterations = 500;
        truth = pf::solve_bfs(*g, po);
      } catch (const Error& e) {
        failure = std::string("truth power flow: ") + e.what();
      }
      for (WiringMode mode : spec.modes) {
        ReportRow row;
        if (truth) {
          try {
            row = run_monte_carlo(*g, *truth, mode, options);
          } catch (const Error& e) {
            row.failed = true;
            row.failure = e.what();
          }
        } else {
          row.failed = true;
          row.failure = failure;
        }
        row.loading = loading;
        row.scale = scale;
        row.mode = mode;
        row.iterations = spec.monte_carlo;
        report.rows.push_back(row);
        if (on_row) on_row(report.rows.back());
      }
    }
  }
  return report;
}

}  // namespace lvse::bench
