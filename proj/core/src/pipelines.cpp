#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "lvse/error.hpp"
#include "lvse/estimator.hpp"

namespace lvse::se {
namespace {

double objective(const Vector& r, const Vector& w) { return r.dot(w.cwiseProduct(r)); }

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Phase magnitudes stay non-negative (a negative magnitude is the same phasor
// turned by pi). Neutral magnitudes are floored instead: their angle is pinned by
// the virtual angle rows, so turning it would fight those rows.
void normalise(StateVector& x, double neutral_floor) {
  const auto& layout = x.layout();
  auto& v = x.values();
  for (std::size_t t = 0; t < layout.terminal_count(); ++t) {
    if (layout.is_reference(t)) continue;
    double& mag = v(layout.mag_col(t));
    double& theta = v(layout.theta_col(t));
    if (is_neutral(layout.terminal(t).phase)) {
      mag = std::max(mag, neutral_floor);
    } else if (mag < 0.0) {
      mag = -mag;
      theta += std::numbers::pi;
    }
    theta = std::remainder(theta, 2.0 * std::numbers::pi);
  }
}

// KKT step that keeps neutral magnitudes at or above `floor`: a magnitude the step
// would push below the floor is held there by an extra equality row.
KktSolution bounded_step(const StateVector& x, const Matrix& h, const Vector& r_diag, const Vector& dz,
                         const Matrix& cj, const Vector& c, double floor,
                         const std::function<std::string(std::size_t)>& label) {
  const auto& layout = x.layout();
  std::vector<int> held;
  KktSolution step = kkt_step(h, r_diag, dz, cj, c, label);
  for (int pass = 0; pass < 8; ++pass) {
    bool added = false;
    for (std::size_t t = 0; t < layout.terminal_count(); ++t) {
      if (layout.is_reference(t) || !is_neutral(layout.terminal(t).phase)) continue;
      const int col = layout.mag_col(t);
      if (x.values()(col) + step.dx(col) >= floor || std::find(held.begin(), held.end(), col) != held.end()) continue;
      held.push_back(col);
      added = true;
    }
    if (!added) break;
    const auto k = static_cast<Eigen::Index>(held.size());
    Matrix cb = Matrix::Zero(cj.rows() + k, h.cols());
    Vector rb(c.size() + k);
    cb.topRows(cj.rows()) = cj;
    rb.head(c.size()) = c;
    for (Eigen::Index i = 0; i < k; ++i) {
      cb(cj.rows() + i, held[static_cast<std::size_t>(i)]) = 1.0;
      rb(c.size() + i) = x.values()(held[static_cast<std::size_t>(i)]) - floor;
    }
    step = kkt_step(h, r_diag, dz, cb, rb, label);
    step.lambda.conservativeResize(c.size());
  }
  return step;
}

void check_config(const EstimationConfig& c) {
  if (!(c.tolerance > 0.0)) throw DomainError("estimator tolerance must be positive");
  if (c.max_iterations < 1) throw DomainError("estimator needs at least one iteration");
  if (c.max_step_halvings < 0) throw DomainError("step halvings must be non-negative");
  if (!(c.constraint_tolerance > 0.0)) throw DomainError("constraint tolerance must be positive");
}

}  // namespace

EstimationResult solve_wls(const net::GridModel& g, const net::AdmittanceMatrix& y, const MeasurementModel& model,
                           StateVector start, const EstimationConfig& config) {
  check_config(config);
  const auto t0 = std::chrono::steady_clock::now();
  const auto layout = start.layout_ptr();
  const auto crows = constraint_rows(g, *layout);
  const Vector w = model.weights();
  const Vector r_diag = model.sigma().array().square().matrix();
  auto label = [&](std::size_t col) { return layout->column_label(col, g); };

  StateVector x = std::move(start);
  normalise(x, config.neutral_floor_pu);
  Vector res = model.z() - eval_h(x, y, model.rows());
  Vector c = eval_h(x, y, crows);
  double j = objective(res, w);

  EstimationResult out;
  out.mode = layout->mode();
  bool converged = false;
  int it = 0;
  while (it < config.max_iterations) {
    ++it;
    const Matrix h = eval_jacobian(x, y, model.rows());
    const Matrix cj = eval_jacobian(x, y, crows);
    const KktSolution step = bounded_step(x, h, r_diag, res, cj, c, config.neutral_floor_pu, label);
    const bool feasible = inf_norm(c) < config.constraint_tolerance;

    // L1 exact penalty; J carries no 1/2 so its multipliers are 2 lambda.
    const double mu = 3.0 * (step.lambda.size() ? step.lambda.cwiseAbs().maxCoeff() : 0.0);
    const double merit = j + mu * c.lpNorm<1>();
    double alpha = 1.0;
    int halvings = 0;
    StateVector trial = x;
    Vector trial_res, trial_c;
    double trial_j = 0.0;
    for (;;) {
      trial.values() = x.values() + alpha * step.dx;
      normalise(trial, config.neutral_floor_pu);
      trial_res = model.z() - eval_h(trial, y, model.rows());
      trial_j = objective(trial_res, w);
      // Restoration steps from an infeasible point are taken in full.
      if (!feasible || halvings >= config.max_step_halvings) break;
      trial_c = eval_h(trial, y, crows);
      if (trial_j + mu * trial_c.lpNorm<1>() <= merit * (1.0 + 1e-12) + 1e-15) break;
      alpha *= 0.5;
      ++halvings;
    }
    trial_c = eval_h(trial, y, crows);
    const double dx_inf = alpha * inf_norm(step.dx);
    x = std::move(trial);
    res = std::move(trial_res);
    c = std::move(trial_c);
    j = trial_j;
    out.lambda = step.lambda;
    out.trace.push_back({it, dx_inf, j, inf_norm(c), feasible, halvings, merit, j + mu * c.lpNorm<1>()});
    if (dx_inf < config.tolerance && inf_norm(c) < config.constraint_tolerance) {
      converged = true;
      break;
    }
  }

  out.converged = converged;
  out.iterations = it;
  out.objective = j;
  out.constraint_inf = inf_norm(c);
  out.residuals = res;
  out.normalized_residuals = res.cwiseQuotient(model.sigma());
  out.measurement_count = model.size();
  out.state_count = layout->size();
  out.constraint_count = crows.size();
  out.voltages.assign(g.node_count(), pf::NodeVoltages{});
  const CVector v = x.voltages();
  for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
    const auto& term = layout->terminal(t);
    out.voltages[term.node][index_of(term.phase)] = v(static_cast<Eigen::Index>(t));
  }
  out.state = std::move(x);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!converged && !config.allow_unconverged)
    throw ConvergenceError("estimator did not converge in " + std::to_string(it) + " iterations");
  return out;
}

std::string EstimationResult::to_csv(const net::GridModel& g) const {
  std::ostringstream os;
  os.precision(17);
  os << "# mode=" << (mode == WiringMode::fourwire ? "N" : "C") << ", iterations=" << iterations
     << ", J=" << objective << ", converged=" << (converged ? "true" : "false") << ", wall_ms=" << wall_ms << "\n";
  os << "node,phase,theta_rad,vmag_pu\n";
  if (!state) return os.str();
  const auto& layout = state->layout();
  for (std::size_t t = 0; t < layout.terminal_count(); ++t) {
    if (layout.is_reference(t)) continue;
    const auto& term = layout.terminal(t);
    os << g.node(term.node).id << "," << to_char(term.phase) << "," << state->theta(t) << ","
       << state->magnitude(t) << "\n";
  }
  return os.str();
}

EstimationResult run_cwls(const net::GridModel& g, const meter::MeasurementSet& ms, EstimationConfig config) {
  config.mode = WiringMode::threewire;
  const auto y = per_unit_admittance(g, WiringMode::threewire);
  auto layout = std::make_shared<const StateLayout>(g, y);
  const MeasurementModel model(g, layout, ms);
  auto start = StateVector::flat(layout, g.require_transformer().model.phase_shift_deg);
  return solve_wls(g, y, model, std::move(start), config);
}

meter::MeasurementSet correct_voltage_measurements(const meter::MeasurementSet& ms, const pf::PowerFlowSolution& pf,
                                                   const net::GridModel& g) {
  if (!pf.converged) throw PipelineError("voltage correction", "power flow is not converged");
  if (pf.voltages.size() != g.node_count()) throw PipelineError("voltage correction", "power flow does not match grid");
  auto records = ms.records();
  for (auto& m : records) {
    if (m.kind != meter::Kind::vmag) continue;
    const Complex vpn = pf.meter_voltage(m.node, m.phase);
    if (!(std::abs(vpn) > 0.0))
      throw PipelineError("voltage correction", "no power flow voltage at '" + g.node(m.node).id + "'");
    const Complex vn = pf.voltage(m.node, Phase::n);
    m.value = std::abs(std::polar(m.value, std::arg(vpn)) + vn);
  }
  return ms.with_records(std::move(records));
}

std::vector<pf::LoadInjection> loads_from_measurements(const meter::MeasurementSet& ms) {
  std::map<std::pair<std::size_t, Phase>, std::pair<std::optional<double>, std::optional<double>>> pq;
  for (const auto& m : ms.records()) {
    if (m.kind == meter::Kind::p_inj) pq[{m.node, m.phase}].first = m.value;
    if (m.kind == meter::Kind::q_inj) pq[{m.node, m.phase}].second = m.value;
  }
  std::vector<pf::LoadInjection> out;
  for (const auto& [key, v] : pq) {
    if (!v.first || !v.second) throw PipelineError("power flow", "meter lacks a P or Q reading");
    out.push_back(pf::LoadInjection::constant_power(key.first, key.second, -Complex(*v.first, *v.second)));
  }
  return out;
}

EstimationResult run_nwls(const net::GridModel& g, const meter::MeasurementSet& ms, EstimationConfig config) {
  config.mode = WiringMode::fourwire;
  const auto& tm = g.require_transformer().model;
  const double vbase = tm.phase_base_v();

  pf::PowerFlowSolution pf;
  try {
    pf::PowerFlowOptions po;
    po.mode = WiringMode::fourwire;
    po.tolerance_pu = config.power_flow_tolerance_pu;
    po.max_iterations = 500;
    pf = pf::solve_bfs(g, loads_from_measurements(ms), po);
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError("power flow", e.what());
  }

  meter::MeasurementSet augmented = ms;
  if (!ms.has_virtual()) {
    double sigma = 0.0;
    if (config.virtual_sigma_pu) {
      sigma = *config.virtual_sigma_pu;
    } else {
      for (const auto& m : ms.records())
        if (m.kind == meter::Kind::vmag) {
          sigma = m.sigma / vbase;
          break;
        }
      if (!(sigma > 0.0)) throw PipelineError("virtual measurements", "no voltage meter to size the virtual sigma");
    }
    augmented = meter::attach_virtual_neutral(ms, pf, g, sigma, config.virtual_angle_weight);
  }
  const auto corrected = config.phase_neutral_vmag ? augmented : correct_voltage_measurements(augmented, pf, g);

  const auto y = per_unit_admittance(g, WiringMode::fourwire);
  auto layout = std::make_shared<const StateLayout>(g, y);
  const MeasurementModel model(g, layout, corrected, config.phase_neutral_vmag);
  CVector v0(static_cast<Eigen::Index>(layout->terminal_count()));
  for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
    const auto& term = layout->terminal(t);
    v0(static_cast<Eigen::Index>(t)) = pf.voltage(term.node, term.phase) / vbase;
  }
  return solve_wls(g, y, model, StateVector::from_voltages(layout, v0), config);
}

EstimationResult run_estimator(const net::GridModel& g, const meter::MeasurementSet& ms,
                               const EstimationConfig& config) {
  return config.mode == WiringMode::fourwire ? run_nwls(g, ms, config) : run_cwls(g, ms, config);
}

}  // namespace lvse::se
