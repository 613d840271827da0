// One PASS/FAIL line per acceptance criterion. Arguments restrict the run to
// the listed criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"
#include "lvse/estimator.hpp"
#include "lvse/feeder_io.hpp"
#include "lvse/line_impedance.hpp"
#include "lvse/metering.hpp"
#include "lvse/powerflow.hpp"
#include "lvse/transformer.hpp"
#include "support.hpp"

using namespace lvse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1
Outcome carson_kron() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> r(0.05, 2.0), gmr(0.001, 0.02), pos(-1.0, 1.0);
  double carson_err = 0.0, kron_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int nc = 2 + trial % 3;
    std::vector<net::Conductor> cs;
    for (int i = 0; i < nc; ++i)
      cs.push_back({i + 1 == nc ? 'n' : "abc"[i], r(rng), gmr(rng), pos(rng) + 1.5 * i, pos(rng)});
    const auto z = net::build_line_impedance(net::ConductorGeometry(cs));
    for (int i = 0; i < nc; ++i)
      for (int k = 0; k < nc; ++k) {
        const double d = i == k ? cs[i].gmr_m : std::hypot(cs[i].x_m - cs[k].x_m, cs[i].y_m - cs[k].y_m);
        const Complex want((i == k ? cs[i].r_ohm_per_km : 0.0) + 0.0493, 0.0628 * (std::log(0.3048 / d) + 8.0251));
        carson_err = std::max(carson_err, std::abs(z(i, k) - want));
      }
    const auto red = net::kron_reduce(z);
    const CMatrix& m = z.z();
    const CMatrix oracle = m.topLeftCorner(nc - 1, nc - 1) - m.topRightCorner(nc - 1, 1) *
                                                               m.bottomRightCorner(1, 1).inverse() *
                                                               m.bottomLeftCorner(1, nc - 1);
    kron_err = std::max(kron_err, (red.z() - oracle).cwiseAbs().maxCoeff());
  }
  const auto t1 = net::line_4x100();
  const auto t1r = net::kron_reduce(t1);
  bool shrinks = true;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      if (i != k) shrinks = shrinks && std::abs(t1r(i, k).imag()) < std::abs(t1(i, k).imag());
  return {carson_err < 1e-12 && kron_err < 1e-12 && shrinks,
          fmt("carson max err %.2e, kron max err %.2e", carson_err, kron_err) +
              (shrinks ? ", built-in 4x100 mutual reactances shrink" : ", mutual reactance did not shrink")};
}

// 2
Outcome transformer_identities() {
  bool ok = true;
  for (double shift : {-30.0, 30.0})
    for (auto [r, x] : {std::pair{0.004, 0.04}, std::pair{0.01, 0.06}}) {
      net::TransformerModel t;
      t.phase_shift_deg = shift;
      t.leakage_admittance_pu = net::TransformerModel::admittance_from_impedance(r, x);
      const auto y = net::build_transformer_admittance(t);
      for (int i = 0; i < 3; ++i)
        ok = ok && y.pp.row(i).sum() == Complex(0.0, 0.0) && y.ps.row(i).sum() == Complex(0.0, 0.0);
      ok = ok && y.sp == y.ps.transpose();
      ok = ok && y.ss == Eigen::Matrix3cd(t.leakage_admittance_pu * Eigen::Matrix3cd::Identity());
    }
  return {ok, ok ? "exact zero row sums, Ysp = Yps^T, Yss = yt I for both shifts" : "identity violated"};
}

// 3
Outcome conservation() {
  std::mt19937_64 rng(303);
  double worst_bal = 0.0, worst_kvl = 0.0;
  const auto base = net::synthetic_feeder();
  for (int i = 0; i < 20; ++i) {
    auto g = fixture::random_loads(base, rng, 500.0, 20000.0);
    g = net::apply_scenario(g, 0.25 + 0.05 * (i % 15), 0.95, i % 2 ? 5.0 : 1.0);
    g = fixture::random_loads(g, rng, 500.0, 45000.0);
    const auto sol = fixture::truth(g, WiringMode::fourwire, 1e-10);
    worst_bal = std::max(worst_bal, pf::power_balance_check(sol, g).relative());
    worst_kvl = std::max(worst_kvl, pf::max_kvl_residual(sol, g));
  }
  return {worst_bal < 1e-3 && worst_kvl < 1e-6,
          fmt("20 random patterns: max balance residual %.2e relative, max KVL residual %.2e V", worst_bal, worst_kvl)};
}

// 4
Outcome balanced_null() {
  const std::string text = R"([linetypes]
sym,matrix,abcn
0.3187,0.754,0.0482,0.47,0.0482,0.47,0.0482,0.47
0.0482,0.47,0.3187,0.754,0.0482,0.47,0.0482,0.47
0.0482,0.47,0.0482,0.47,0.3187,0.754,0.0482,0.47
0.0482,0.47,0.0482,0.47,0.0482,0.47,0.3187,0.754
[nodes]
mv,source,abc
lv,junction,abcn
j1,junction,abcn
h1,consumer,abcn
h2,consumer,abcn
[branches]
lv,j1,sym,0.2
j1,h1,sym,0.1
j1,h2,sym,0.15
[transformer]
mv,lv,800000,11000,416,0.004,0.04,-30
[loads]
h1,abc,60000,19721.0
h2,abc,30000,9860.5
[grounding]
lv
)";
  const auto g = net::parse_feeder(text);
  const auto sol = fixture::truth(g, WiringMode::fourwire);
  double vn = 0.0;
  for (std::size_t u : g.preorder()) vn = std::max(vn, std::abs(sol.voltage(u, Phase::n)) / fixture::vbase(g));
  return {vn < 1e-9, fmt("max |Vn| %.2e pu under balanced load on a symmetric line", vn)};
}

// 5
Outcome ground_reference() {
  double pf_err = 0.0, se_err = 0.0;
  for (auto [l, s] : {std::pair{0.5, 1.0}, std::pair{1.0, 5.0}}) {
    const auto g = net::with_neutral_grounded_everywhere(fixture::scenario(l, s));
    const double vb = fixture::vbase(g);
    const auto a = fixture::truth(g, WiringMode::fourwire);
    const auto b = fixture::truth(g, WiringMode::threewire);
    for (std::size_t u : g.preorder())
      for (Phase p : g.node(u).phases.without_neutral().members())
        pf_err = std::max(pf_err, std::abs(a.voltage(u, p) - b.voltage(u, p)) / vb);
    const auto ms = meter::simulate_measurements(b, g, meter::default_meter_classes(), 505);
    se::EstimationConfig cfg;
    cfg.tolerance = 1e-11;
    const auto rc = se::run_cwls(g, ms, cfg);
    const auto rn = se::run_nwls(g, ms, cfg);
    for (std::size_t u : g.preorder())
      for (Phase p : g.node(u).phases.without_neutral().members())
        se_err = std::max(se_err, std::abs(rc.voltage(u, p) - rn.voltage(u, p)));
  }
  return {pf_err < 1e-9 && se_err < 1e-8,
          fmt("power flow 4-wire vs 3-wire %.2e pu, N-WLS vs C-WLS %.2e pu", pf_err, se_err)};
}

// 6
Outcome jacobian_check() {
  const auto g = fixture::scenario(0.5, 2.0);
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (WiringMode mode : {WiringMode::threewire, WiringMode::fourwire}) {
    const auto y = se::per_unit_admittance(g, mode);
    const auto layout = std::make_shared<const se::StateLayout>(g, y);
    std::vector<se::Row> rows = se::constraint_rows(g, *layout);
    for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
      if (layout->is_reference(t)) continue;
      const auto& term = layout->terminal(t);
      const int ti = static_cast<int>(t);
      if (is_neutral(term.phase)) {
        rows.push_back({se::RowKind::vn_mag, ti, -1});
        rows.push_back({se::RowKind::theta_n, ti, -1});
        continue;
      }
      const auto n = layout->terminal_index(term.node, Phase::n);
      const int ni = n ? static_cast<int>(*n) : -1;
      rows.push_back({se::RowKind::p_inj, ti, ni});
      rows.push_back({se::RowKind::q_inj, ti, ni});
      rows.push_back({se::RowKind::vmag, ti, -1});
      if (ni >= 0) rows.push_back({se::RowKind::vmag_phase_neutral, ti, ni});
    }
    std::uniform_real_distribution<double> mag(0.85, 1.1), dth(-0.15, 0.15), nmag(0.001, 0.08), nth(-M_PI, M_PI);
    for (int trial = 0; trial < 100; ++trial) {
      auto x = se::StateVector::flat(layout, -30.0);
      for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
        if (layout->is_reference(t)) continue;
        const bool neu = is_neutral(layout->terminal(t).phase);
        auto& th = x.values()(layout->theta_col(t));
        th = neu ? nth(rng) : th + dth(rng);
        x.values()(layout->mag_col(t)) = neu ? nmag(rng) : mag(rng);
      }
      const Matrix h = se::eval_jacobian(x, y, rows);
      const double step = 1e-6;
      for (Eigen::Index col = 0; col < h.cols(); ++col) {
        auto xp = x, xm = x;
        xp.values()(col) += step;
        xm.values()(col) -= step;
        const Vector fd = (se::eval_h(xp, y, rows) - se::eval_h(xm, y, rows)) / (2.0 * step);
        for (Eigen::Index r = 0; r < fd.size(); ++r)
          worst = std::max(worst, std::abs(fd(r) - h(r, col)) / std::max(1.0, std::abs(h(r, col))));
      }
    }
  }
  return {worst < 1e-5, fmt("100 random states per mode, max deviation %.2e relative to max(|H_ij|, 1)", worst)};
}

struct RecoveryCase {
  double loading, scale;
  net::LoadModel model;
};

// 7
Outcome noiseless_recovery() {
  double worst_v = 0.0, worst_t = 0.0;
  int worst_it = 0;
  const RecoveryCase cases[] = {{0.25, 0.5, net::LoadModel::constant_power},
                                {0.75, 5.0, net::LoadModel::constant_power},
                                {1.0, 5.0, net::LoadModel::constant_power},
                                {0.5, 2.0, net::LoadModel::constant_impedance}};
  for (const auto& c : cases) {
    const auto g = net::with_load_model(fixture::scenario(c.loading, c.scale), c.model);
    const double vb = fixture::vbase(g);
    for (WiringMode mode : {WiringMode::threewire, WiringMode::fourwire}) {
      const auto truth = fixture::truth(g, mode);
      const auto ms = meter::simulate_measurements(truth, g, meter::default_meter_classes(), 707, 0.0);
      const auto r = mode == WiringMode::fourwire ? se::run_nwls(g, ms) : se::run_cwls(g, ms);
      worst_it = std::max(worst_it, r.iterations);
      for (std::size_t u : g.preorder())
        for (Phase p : g.node(u).phases.members()) {
          if (is_neutral(p) && (mode == WiringMode::threewire || g.neutral_grounded(u))) continue;
          const Complex e = r.voltage(u, p), t = truth.voltage(u, p) / vb;
          worst_v = std::max(worst_v, std::abs(std::abs(e) - std::abs(t)));
          if (!is_neutral(p)) worst_t = std::max(worst_t, std::abs(std::remainder(std::arg(e) - std::arg(t), 2 * M_PI)));
        }
    }
  }
  return {worst_v < 1e-6 && worst_t < 1e-6 && worst_it <= 10,
          fmt("8 runs: max |V| err %.2e pu, max angle err %.2e rad, max %g iterations", worst_v, worst_t, worst_it)};
}

// 8
Outcome kkt_contract() {
  double worst_c = 0.0, worst_rise = 0.0, worst_j = 0.0;
  int runs = 0;
  for (auto [l, s] : {std::pair{0.25, 0.5}, std::pair{0.75, 5.0}, std::pair{1.0, 5.0}}) {
    const auto g = fixture::scenario(l, s);
    const auto truth = fixture::truth(g, WiringMode::fourwire, 1e-10);
    for (int i = 0; i < 20; ++i) {
      const auto ms = meter::simulate_measurements(truth, g, meter::default_meter_classes(), meter::derive_seed(808, i));
      for (const auto& r : {se::run_cwls(g, ms), se::run_nwls(g, ms)}) {
        ++runs;
        worst_c = std::max(worst_c, r.constraint_inf);
        for (std::size_t k = 1; k < r.trace.size(); ++k)
          if (r.trace[k].feasible_start) {
            worst_rise = std::max(worst_rise, r.trace[k].merit_end / r.trace[k].merit_start - 1.0);
            worst_j = std::max(worst_j, r.trace[k].objective / r.trace[k - 1].objective - 1.0);
          }
      }
    }
  }
  return {worst_c < 1e-8 && worst_rise <= 1e-12,
          fmt("%g noisy runs: max |c| %.2e pu at convergence; over feasible-start steps max relative rise of "
              "J + mu|c|_1 %.2e, of J alone %.2e",
              runs, worst_c, worst_rise, worst_j)};
}

// 9
Outcome noise_statistics() {
  const auto g = net::parse_feeder(net::two_node_feeder_text());
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto classes = meter::default_meter_classes();
  const auto exact = meter::simulate_measurements(truth, g, classes, 0, 0.0);
  const std::size_t n = exact.size();
  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto ms = meter::simulate_measurements(truth, g, classes, meter::derive_seed(909, i));
    for (std::size_t k = 0; k < n; ++k) {
      const double e = ms.records()[k].value - exact.records()[k].value;
      sum[k] += e;
      sq[k] += e * e;
    }
  }
  double worst = 0.0;
  double sd[3] = {0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    const double mean = sum[k] / draws;
    const double s = std::sqrt((sq[k] - draws * mean * mean) / (draws - 1));
    const auto kind = exact.records()[k].kind;
    worst = std::max(worst, std::abs(s / classes.sigma(kind) - 1.0));
    sd[static_cast<int>(kind)] = s;
  }
  const bool table = std::abs(classes.sigma(meter::Kind::p_inj) - 28.163) < 1e-3 &&
                     std::abs(classes.sigma(meter::Kind::q_inj) - 46.939) < 1e-3 &&
                     std::abs(classes.sigma(meter::Kind::vmag) - 0.6122) < 1e-4;
  return {table && worst < 0.03, fmt("sample sd P %.3f VA, Q %.3f VA, V %.4f V; worst channel off by %.2f%%", sd[0],
                                     sd[1], sd[2], 100.0 * worst)};
}

bench::MonteCarloOptions mc_options(std::size_t mc, std::uint64_t seed, unsigned threads = 0) {
  bench::MonteCarloOptions o;
  o.iterations = mc;
  o.master_seed = seed;
  o.threads = threads;
  return o;
}

// 10
Outcome central_claim() {
  const auto g = fixture::scenario(0.75, 5.0);
  const auto truth = fixture::truth(g, WiringMode::fourwire, 1e-10);
  const auto o = mc_options(100, 1010);
  const auto c = bench::run_monte_carlo(g, truth, WiringMode::threewire, o);
  const auto n = bench::run_monte_carlo(g, truth, WiringMode::fourwire, o);
  if (c.failed || n.failed) return {false, "Monte Carlo row failed: " + c.failure + n.failure};
  const double imax = bench::improvement_percent(c.max_v.mean, n.max_v.mean);
  const double iavg = bench::improvement_percent(c.avg_v.mean, n.avg_v.mean);
  return {imax >= 50.0 && iavg >= 50.0,
          fmt("loading 0.75 scale 5 MC 100: max|dV| %.2e -> %.2e pu (%.1f%%), ", c.max_v.mean, n.max_v.mean, imax) +
              fmt("avg|dV| %.2e -> %.2e pu (%.1f%%)", c.avg_v.mean, n.avg_v.mean, iavg)};
}

bench::ScenarioSpec full_grid_spec(std::size_t mc) {
  bench::ScenarioSpec s;
  s.monte_carlo = mc;
  s.seed = 1111;
  return s;
}

std::string sweep_csv;

// 11
Outcome trends() {
  const auto spec = full_grid_spec(100);
  const auto report = bench::run_scenario_sweep(net::synthetic_feeder(), spec, mc_options(spec.monte_carlo, spec.seed));
  sweep_csv = bench::report_csv(report);
  auto cell = [&](double l, double s, WiringMode m) -> const bench::ReportRow& {
    for (const auto& r : report.rows)
      if (r.loading == l && r.scale == s && r.mode == m) return r;
    throw Error("missing sweep cell");
  };
  std::ostringstream bad;
  int failed_cells = 0;
  for (const auto& r : report.rows) failed_cells += r.failed ? 1 : 0;
  using Metric = double (*)(const bench::ReportRow&);
  const std::pair<const char*, Metric> metrics[] = {
      {"max|dV|", [](const bench::ReportRow& r) { return r.max_v.mean; }},
      {"avg|dV|", [](const bench::ReportRow& r) { return r.avg_v.mean; }},
      {"avg|dtheta|", [](const bench::ReportRow& r) { return r.avg_theta.mean; }}};
  for (const auto& [name, get] : metrics) {
    for (double s : spec.scales)
      for (std::size_t i = 1; i < spec.loadings.size(); ++i)
        if (get(cell(spec.loadings[i], s, WiringMode::threewire)) < get(cell(spec.loadings[i - 1], s, WiringMode::threewire)))
          bad << " C " << name << " falls with loading at scale " << s << ";";
    for (double l : spec.loadings)
      for (std::size_t i = 1; i < spec.scales.size(); ++i)
        if (get(cell(l, spec.scales[i], WiringMode::threewire)) < get(cell(l, spec.scales[i - 1], WiringMode::threewire)))
          bad << " C " << name << " falls with scale at loading " << l << ";";
  }
  double worst_ratio = 1.0;
  for (const auto& [name, get] : metrics) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : report.rows)
      if (r.mode == WiringMode::fourwire) {
        lo = std::min(lo, get(r));
        hi = std::max(hi, get(r));
      }
    worst_ratio = std::max(worst_ratio, hi / lo);
  }
  const bool ok = failed_cells == 0 && bad.str().empty() && worst_ratio < 2.0;
  return {ok, fmt("32 cells MC 100, %g failed; N-WLS max/min metric ratio %.2f", failed_cells, worst_ratio) +
                  (bad.str().empty() ? "; all C-WLS metrics grow with loading and scale" : ";" + bad.str())};
}

// 12
Outcome determinism() {
  const auto spec = full_grid_spec(100);
  const auto base = net::synthetic_feeder();
  std::vector<std::string> runs;
  if (!sweep_csv.empty()) runs.push_back(sweep_csv);
  for (unsigned threads : {1u, 3u}) {
    if (runs.size() >= 3) break;
    runs.push_back(bench::report_csv(bench::run_scenario_sweep(base, spec, mc_options(spec.monte_carlo, spec.seed, threads))));
  }
  if (runs.size() < 3)
    runs.push_back(bench::report_csv(bench::run_scenario_sweep(base, spec, mc_options(spec.monte_carlo, spec.seed, 2))));
  bool same = true;
  for (const auto& r : runs) same = same && r == runs.front();
  return {same, fmt("%g sweeps (32 cells, MC 100) at 1 to 3 workers, csv %s", static_cast<double>(runs.size())) +
                    (same ? "bit-identical" : "differs")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion all[] = {
      {1, "Carson/Kron correctness", 1.0, carson_kron},
      {2, "transformer identities", 1.0, transformer_identities},
      {3, "power-flow conservation", 5.0, conservation},
      {4, "balanced-symmetry null", 1.0, balanced_null},
      {5, "ground-reference equivalence", 5.0, ground_reference},
      {6, "Jacobian check", 30.0, jacobian_check},
      {7, "noiseless recovery", 10.0, noiseless_recovery},
      {8, "KKT contract", 0.0, kkt_contract},
      {9, "noise statistics", 5.0, noise_statistics},
      {10, "central claim, N-WLS vs C-WLS", 300.0, central_claim},
      {11, "trend reproduction", 900.0, trends},
      {12, "determinism", 0.0, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
