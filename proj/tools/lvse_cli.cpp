// lvse: line parameters, power flow, state estimation and Monte Carlo sweeps
// on four-wire low-voltage feeders.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"
#include "lvse/estimator.hpp"
#include "lvse/feeder_io.hpp"
#include "lvse/line_impedance.hpp"
#include "lvse/metering.hpp"
#include "lvse/powerflow.hpp"

using namespace lvse;

namespace {

struct Common {
  std::string feeder;
  std::uint64_t seed = 1;
  std::string mode;
  std::string out;
  bool trace = false;
};

struct ScenarioArgs {
  double loading = 0.5;
  double scale = 1.0;
  double pf = 0.95;
  bool keep_loads = false;
};

void add_scenario(CLI::App* app, ScenarioArgs& s) {
  app->add_option("--loading", s.loading, "Loading as a fraction of the transformer rating")->check(CLI::Range(0.0, 1.25));
  app->add_option("--scale", s.scale, "Line length multiplier")->check(CLI::PositiveNumber);
  app->add_option("--pf", s.pf, "Lagging load power factor")->check(CLI::Range(0.0, 1.0));
  app->add_flag("--keep-loads", s.keep_loads, "Use the feeder's loads and lengths as written");
}

net::GridModel load_grid(const Common& c) {
  return c.feeder.empty() ? net::synthetic_feeder() : net::load_feeder(c.feeder);
}

std::string scenario_label(const ScenarioArgs& s) {
  if (s.keep_loads) return "as written";
  std::ostringstream os;
  os << "loading " << s.loading << " scale " << s.scale << " pf " << s.pf;
  return os.str();
}

net::GridModel scenario_grid(const Common& c, const ScenarioArgs& s) {
  auto g = load_grid(c);
  return s.keep_loads ? g : net::apply_scenario(g, s.loading, s.pf, s.scale);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out, std::ios::binary);
  if (!out) throw Error("cannot write '" + c.out + "'");
  out << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

int cmd_lineparams(const Common& c) {
  std::vector<net::LineType> types;
  if (c.feeder.empty()) {
    types.push_back({"4x100", net::line_4x100(), std::nullopt});
    types.push_back({"2x22", net::line_2x22(), std::nullopt});
  } else {
    types = net::parse_line_types(read_file(c.feeder), c.feeder);
  }
  const bool want_full = c.mode.empty() || c.mode == "N";
  const bool want_reduced = c.mode.empty() || c.mode == "C";
  std::ostringstream os;
  os << "linetype,reduced,row,col,r_ohm_per_km,x_ohm_per_km\n";
  auto dump = [&](const std::string& name, const net::LineImpedance& z, bool reduced) {
    const auto& m = z.z();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k)
        os << name << "," << (reduced ? 1 : 0) << "," << z.labels()[static_cast<std::size_t>(i)] << ","
           << z.labels()[static_cast<std::size_t>(k)] << "," << fmt(m(i, k).real()) << "," << fmt(m(i, k).imag())
           << "\n";
  };
  for (const auto& t : types) {
    if (c.trace && t.geometry) {
      const auto& g = *t.geometry;
      std::cerr << t.name << " spacing (m):\n";
      for (std::size_t i = 0; i < g.conductors().size(); ++i) {
        for (std::size_t k = 0; k < g.conductors().size(); ++k) std::cerr << " " << fmt(g.spacing(i, k));
        std::cerr << "\n";
      }
    }
    if (want_full) dump(t.name, t.impedance, false);
    if (want_reduced && t.impedance.neutral_index()) dump(t.name, net::kron_reduce(t.impedance), true);
  }
  emit(c, os.str());
  return 0;
}

WiringMode wiring(const Common& c, WiringMode fallback) {
  return c.mode.empty() ? fallback : bench::mode_from_name(c.mode);
}

int cmd_pf(const Common& c, const ScenarioArgs& s) {
  const auto g = scenario_grid(c, s);
  pf::PowerFlowOptions po;
  po.mode = wiring(c, WiringMode::fourwire);
  const auto sol = pf::solve_bfs(g, po);
  std::ostringstream os;
  os << "# mode=" << bench::mode_name(po.mode) << ", iterations=" << sol.iterations << "\n";
  os << "node,phase,vmag_v,angle_deg\n";
  for (std::size_t u = 0; u < g.node_count(); ++u)
    for (Phase p : g.node(u).phases.members()) {
      if (is_neutral(p) && po.mode == WiringMode::threewire) continue;
      const Complex v = sol.voltage(u, p);
      os << g.node(u).id << "," << to_char(p) << "," << fmt(std::abs(v)) << ","
         << fmt(std::arg(v) * 180.0 / std::numbers::pi) << "\n";
    }
  if (c.trace) {
    const auto bal = pf::power_balance_check(sol, g);
    std::cerr << "iterations " << sol.iterations << ", last update " << sol.max_update_pu << " pu\n"
              << "slack " << sol.total_slack_power() << " VA, line losses " << bal.line_losses
              << " VA, transformer losses " << bal.transformer_losses << " VA\n"
              << "balance residual " << bal.residual_va << " VA, KVL residual " << pf::max_kvl_residual(sol, g)
              << " V\n";
  }
  emit(c, os.str());
  return 0;
}

int cmd_estimate(const Common& c, const ScenarioArgs& s, const std::string& measurements,
                 const std::string& write_measurements, double noise, bool phase_neutral) {
  const auto g = scenario_grid(c, s);
  pf::PowerFlowOptions po;
  po.tolerance_pu = 1e-10;
  const auto truth = pf::solve_bfs(g, po);
  const auto ms = measurements.empty()
                      ? meter::simulate_measurements(truth, g, meter::default_meter_classes(), c.seed, noise, scenario_label(s))
                      : meter::MeasurementSet::from_csv(read_file(measurements), g);
  if (!write_measurements.empty()) {
    std::ofstream out(write_measurements, std::ios::binary);
    if (!out) throw Error("cannot write '" + write_measurements + "'");
    out << ms.to_csv(g);
  }
  se::EstimationConfig cfg;
  cfg.mode = wiring(c, WiringMode::fourwire);
  cfg.phase_neutral_vmag = phase_neutral;
  cfg.allow_unconverged = true;
  const auto est = se::run_estimator(g, ms, cfg);
  if (c.trace) {
    for (const auto& t : est.trace)
      std::cerr << "iter " << t.iteration << "  |dx|inf " << t.dx_inf << "  J " << t.objective << "  |c|inf "
                << t.constraint_inf << (t.halvings ? "  halved " + std::to_string(t.halvings) : "") << "\n";
    if (measurements.empty()) {
      const auto err = bench::state_errors(est, truth, g);
      std::cerr << "max |dV| " << bench::metric_avg_max_v({err.vmag_pu}) << " pu, rms |dV| "
                << bench::metric_avg_v({err.vmag_pu}) << " pu, rms |dtheta| " << bench::metric_avg_theta({err.theta_rad})
                << " rad\n";
    }
  }
  emit(c, est.to_csv(g));
  if (!est.converged) {
    std::cerr << "estimator did not converge\n";
    return 3;
  }
  return 0;
}

int cmd_bench(const Common& c, const std::string& spec_path, std::optional<std::size_t> mc, unsigned threads,
              const std::string& format, bool timing) {
  auto spec = spec_path.empty() ? bench::ScenarioSpec{} : bench::load_scenario_spec(spec_path);
  if (mc) spec.monte_carlo = *mc;
  if (!c.mode.empty()) spec.modes = {bench::mode_from_name(c.mode)};
  if (!c.feeder.empty()) spec.feeder = c.feeder;
  spec.seed = c.seed == 0 ? spec.seed : c.seed;
  const auto base = spec.feeder.empty() ? net::synthetic_feeder() : net::load_feeder(spec.feeder);
  bench::MonteCarloOptions mo;
  mo.threads = threads;
  auto on_row = [&](const bench::ReportRow& r) {
    if (!c.trace) return;
    std::cerr << "loading " << r.loading << " scale " << r.scale << " " << bench::mode_name(r.mode) << ": ";
    if (r.failed)
      std::cerr << "FAILED " << r.failure << "\n";
    else
      std::cerr << "max|dV| " << r.max_v.mean << " avg|dV| " << r.avg_v.mean << " avg|dth| " << r.avg_theta.mean
                << " (" << r.failed_iterations << " failed)\n";
  };
  const auto report = bench::run_scenario_sweep(base, spec, mo, on_row);
  const auto fmt_kind = bench::export_format_from_name(format);
  if (c.out.empty() || c.out == "-") {
    if (fmt_kind == bench::ExportFormat::plotdata) throw DomainError("plotdata needs --out <directory>");
    std::cout << (fmt_kind == bench::ExportFormat::csv ? bench::report_csv(report, timing) : bench::report_table(report));
  } else {
    for (const auto& f : bench::export_report(report, fmt_kind, c.out, timing)) std::cerr << "wrote " << f << "\n";
  }
  for (const auto& r : report.rows)
    if (r.failed) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-wire low-voltage feeder modelling and state estimation"};
  app.require_subcommand(1);
  Common common;
  ScenarioArgs scen;

  auto add_common = [&](CLI::App* sub, bool seed) {
    sub->add_option("--feeder", common.feeder, "Feeder file (default: built-in synthetic feeder)");
    if (seed) sub->add_option("--seed", common.seed, "Master seed for measurement noise");
    sub->add_option("--mode", common.mode, "Wiring / estimator mode: C (three-wire) or N (four-wire)")
        ->check(CLI::IsMember({"C", "N"}));
    sub->add_option("--out", common.out, "Output path ('-' for stdout)");
    sub->add_flag("--trace", common.trace, "Per-iteration diagnostics on stderr");
  };

  auto* lp = app.add_subcommand("lineparams", "Series impedance matrices and their Kron reduction, Ohm/km");
  add_common(lp, false);

  auto* pfc = app.add_subcommand("pf", "Backward/forward sweep power flow");
  add_common(pfc, false);
  add_scenario(pfc, scen);

  auto* est = app.add_subcommand("estimate", "One state estimation run on simulated or recorded meter data");
  add_common(est, true);
  add_scenario(est, scen);
  std::string meas_in, meas_out;
  double noise = 1.0;
  bool phase_neutral = false;
  est->add_option("--measurements", meas_in, "Measurement CSV to use instead of simulated readings");
  est->add_option("--write-measurements", meas_out, "Save the measurement set used");
  est->add_option("--noise", noise, "Multiplier on the simulated meter noise")->check(CLI::NonNegativeNumber);
  est->add_flag("--phase-neutral-vmag", phase_neutral, "Keep four-wire |V| rows phase-to-neutral (diagnostic)");

  auto* bn = app.add_subcommand("bench", "Monte Carlo sweep over loading and line length");
  add_common(bn, true);
  common.seed = 0;
  std::string spec_path, format = "table";
  std::optional<std::size_t> mc;
  unsigned threads = 0;
  bool timing = false;
  bn->add_option("--spec", spec_path, "Scenario spec file with a [sweep] section");
  bn->add_option("--mc", mc, "Monte Carlo iterations per cell (overrides the spec)")->check(CLI::PositiveNumber);
  bn->add_option("--threads", threads, "Worker threads (0: all cores)");
  bn->add_option("--format", format, "csv, table or plotdata")->check(CLI::IsMember({"csv", "table", "plotdata"}));
  bn->add_flag("--timing", timing, "Add mean wall time to csv output");

  CLI11_PARSE(app, argc, argv);
  if (!est->parsed() && common.seed == 0 && !bn->parsed()) common.seed = 1;
  if (est->parsed() && est->count("--seed") == 0) common.seed = 1;

  try {
    if (lp->parsed()) return cmd_lineparams(common);
    if (pfc->parsed()) return cmd_pf(common, scen);
    if (est->parsed()) return cmd_estimate(common, scen, meas_in, meas_out, noise, phase_neutral);
    if (bn->parsed()) return cmd_bench(common, spec_path, mc, threads, format, timing);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
