#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "lvse/error.hpp"
#include "lvse/powerflow.hpp"

namespace lvse::pf {

namespace {

constexpr double kCollapseVolts = 1.0;

struct BranchModel {
  std::vector<Phase> conductors;
  CMatrix z;
  // Pinned-neutral mode: I_n = pin_gain * I_phases.
  std::optional<Eigen::RowVectorXcd> pin_gain;
  std::vector<Eigen::Index> phase_rows;
  std::optional<Eigen::Index> neutral_row;
};

std::vector<BranchModel> branch_models(const net::GridModel& g, WiringMode mode, bool pinned) {
  std::vector<BranchModel> out;
  out.reserve(g.branches().size());
  for (std::size_t b = 0; b < g.branches().size(); ++b) {
    BranchModel m;
    for (Phase p : g.branch_conductors(b))
      if (!(mode == WiringMode::threewire && is_neutral(p))) m.conductors.push_back(p);
    m.z = g.branch_impedance(b, mode);
    for (std::size_t k = 0; k < m.conductors.size(); ++k) {
      if (is_neutral(m.conductors[k]))
        m.neutral_row = static_cast<Eigen::Index>(k);
      else
        m.phase_rows.push_back(static_cast<Eigen::Index>(k));
    }
    if (pinned && m.neutral_row) {
      const Complex znn = m.z(*m.neutral_row, *m.neutral_row);
      Eigen::RowVectorXcd gain(static_cast<Eigen::Index>(m.phase_rows.size()));
      for (std::size_t k = 0; k < m.phase_rows.size(); ++k)
        gain(static_cast<Eigen::Index>(k)) = -m.z(*m.neutral_row, m.phase_rows[k]) / znn;
      m.pin_gain = gain;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

std::array<Complex, 3> source_voltages(const net::TransformerModel& t) {
  const double v = t.phase_base_v();
  return {polar_deg(v, 0.0), polar_deg(v, -120.0), polar_deg(v, 120.0)};
}

std::vector<LoadInjection> loads_from_grid(const net::GridModel& g) {
  const double vbase = g.transformer() ? g.transformer()->model.phase_base_v() : 416.0 / std::sqrt(3.0);
  std::vector<LoadInjection> out;
  for (const auto& l : g.loads()) {
    if (l.model == net::LoadModel::constant_power)
      out.push_back(LoadInjection::constant_power(l.node, l.phase, l.power()));
    else
      out.push_back(LoadInjection::constant_impedance(l.node, l.phase, std::conj(l.power()) / (vbase * vbase)));
  }
  return out;
}

Complex injected_current(Complex s, Complex v_phase, Complex v_neutral) {
  const Complex dv = v_phase - v_neutral;
  if (!(std::abs(dv) > kCollapseVolts)) throw VoltageCollapseError("phase-to-neutral voltage collapsed");
  return std::conj(s / dv);
}

PowerFlowSolution solve_bfs(const net::GridModel& g, const PowerFlowOptions& options) {
  const auto loads = loads_from_grid(g);
  return solve_bfs(g, loads, options);
}

PowerFlowSolution solve_bfs(const net::GridModel& g, std::span<const LoadInjection> loads,
                            const PowerFlowOptions& options) {
  const auto& tc = g.require_transformer();
  const auto& tm = tc.model;
  const auto yt = net::to_siemens(net::build_transformer_admittance(tm), tm);
  const Eigen::PartialPivLU<Eigen::Matrix3cd> yss_lu(yt.ss);
  const auto vsrc = source_voltages(tm);
  const Eigen::Vector3cd vsrc_vec(vsrc[0], vsrc[1], vsrc[2]);
  const double vbase = tm.phase_base_v();

  const WiringMode mode = options.mode;
  const bool pinned = mode == WiringMode::threewire || g.grounded_everywhere();
  const auto models = branch_models(g, mode, pinned);
  for (const auto& l : loads)
    if (l.node >= g.node_count() || is_neutral(l.phase) || !g.node(l.node).phases.contains(l.phase))
      throw ModelError("load injection references an absent node phase");

  PowerFlowSolution sol;
  sol.mode = mode;
  sol.voltages.assign(g.node_count(), NodeVoltages{});
  sol.branch_currents.assign(g.branches().size(), NodeVoltages{});
  const std::size_t root = g.root();
  const std::size_t src = *g.source();
  for (std::size_t k = 0; k < 3; ++k) sol.voltages[src][k] = vsrc[k];
  const std::array<double, 3> flat_deg{0.0, -120.0, 120.0};
  for (std::size_t u : g.preorder())
    for (Phase p : kPowerPhases)
      if (g.node(u).phases.contains(p))
        sol.voltages[u][index_of(p)] = polar_deg(vbase, flat_deg[index_of(p)] + tm.phase_shift_deg);

  const auto& order = g.preorder();
  std::vector<NodeVoltages> drawn(g.node_count());
  const bool neutral_returns = !pinned;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Backward sweep.
    std::fill(drawn.begin(), drawn.end(), NodeVoltages{});
    for (const auto& l : loads) {
      const Complex vp = sol.voltages[l.node][index_of(l.phase)];
      const Complex vn = sol.voltages[l.node][index_of(Phase::n)];
      Complex i;
      if (l.admittance) {
        i = *l.admittance * (vp - vn);
      } else {
        try {
          i = injected_current(l.power, vp, vn);
        } catch (const VoltageCollapseError&) {
          throw VoltageCollapseError("voltage collapse at node '" + g.node(l.node).id + "' phase " +
                                     std::string(1, to_char(l.phase)));
        }
      }
      drawn[l.node][index_of(l.phase)] += i;
      if (neutral_returns) drawn[l.node][index_of(Phase::n)] -= i;
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t u = *it;
      auto pb = g.parent_branch(u);
      if (!pb) continue;
      const auto& m = models[*pb];
      NodeVoltages cur = drawn[u];
      for (std::size_t cb : g.child_branches(u))
        for (std::size_t k = 0; k < 4; ++k) cur[k] += sol.branch_currents[cb][k];
      NodeVoltages out{};
      for (Phase p : m.conductors) out[index_of(p)] = cur[index_of(p)];
      if (m.pin_gain) {
        Complex in{0.0, 0.0};
        for (std::size_t k = 0; k < m.phase_rows.size(); ++k)
          in += (*m.pin_gain)(static_cast<Eigen::Index>(k)) *
                out[index_of(m.conductors[static_cast<std::size_t>(m.phase_rows[k])])];
        out[index_of(Phase::n)] = in;
      }
      sol.branch_currents[*pb] = out;
    }

    // LV root from the MV source through the transformer.
    Eigen::Vector3cd feed = Eigen::Vector3cd::Zero();
    for (std::size_t k = 0; k < 3; ++k) {
      feed(static_cast<Eigen::Index>(k)) = drawn[root][k];
      for (std::size_t cb : g.child_branches(root)) feed(static_cast<Eigen::Index>(k)) += sol.branch_currents[cb][k];
    }
    const Eigen::Vector3cd vroot = yss_lu.solve(-(feed + yt.sp * vsrc_vec));

    // Forward sweep.
    double max_update = 0.0;
    auto assign = [&](std::size_t node, std::size_t k, Complex v) {
      max_update = std::max(max_update, std::abs(v - sol.voltages[node][k]) / vbase);
      sol.voltages[node][k] = v;
    };
    for (std::size_t k = 0; k < 3; ++k) assign(root, k, vroot(static_cast<Eigen::Index>(k)));
    for (std::size_t u : order) {
      for (std::size_t cb : g.child_branches(u)) {
        const auto& m = models[cb];
        const std::size_t to = g.branches()[cb].to;
        const auto nc = static_cast<Eigen::Index>(m.conductors.size());
        Eigen::VectorXcd ib(nc);
        for (Eigen::Index k = 0; k < nc; ++k)
          ib(k) = sol.branch_currents[cb][index_of(m.conductors[static_cast<std::size_t>(k)])];
        const Eigen::VectorXcd drop = m.z * ib;
        for (Eigen::Index k = 0; k < nc; ++k) {
          const Phase p = m.conductors[static_cast<std::size_t>(k)];
          if (is_neutral(p) && pinned) continue;
          assign(to, index_of(p), sol.voltages[u][index_of(p)] - drop(k));
        }
      }
    }

    sol.iterations = iter;
    sol.max_update_pu = max_update;
    if (max_update < options.tolerance_pu) {
      sol.converged = true;
      break;
    }
  }

  if (!sol.converged && !options.allow_unconverged)
    throw ConvergenceError("backward/forward sweep did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (last update " + std::to_string(sol.max_update_pu) + " pu)");

  Eigen::Vector3cd vs;
  for (std::size_t k = 0; k < 3; ++k) vs(static_cast<Eigen::Index>(k)) = sol.voltages[root][k];
  const Eigen::Vector3cd ip = yt.pp * vsrc_vec + yt.ps * vs;
  for (std::size_t k = 0; k < 3; ++k) sol.slack_power[k] = vsrc[k] * std::conj(ip(static_cast<Eigen::Index>(k)));
  return sol;
}

double PowerBalance::relative() const {
  const double s = std::abs(loads);
  return s > 0.0 ? residual_va / s : residual_va;
}

PowerBalance power_balance_check(const PowerFlowSolution& sol, const net::GridModel& g) {
  const auto loads = loads_from_grid(g);
  return power_balance_check(sol, g, loads);
}

PowerBalance power_balance_check(const PowerFlowSolution& sol, const net::GridModel& g,
                                 std::span<const LoadInjection> loads) {
  PowerBalance pb;
  pb.slack = sol.total_slack_power();
  for (const auto& l : loads) {
    if (l.admittance) {
      const Complex dv = sol.meter_voltage(l.node, l.phase);
      pb.loads += dv * std::conj(*l.admittance * dv);
    } else {
      pb.loads += l.power;
    }
  }
  for (std::size_t b = 0; b < g.branches().size(); ++b) {
    std::vector<Phase> conductors;
    for (Phase p : g.branch_conductors(b))
      if (!(sol.mode == WiringMode::threewire && is_neutral(p))) conductors.push_back(p);
    const CMatrix z = g.branch_impedance(b, sol.mode);
    Eigen::VectorXcd i(static_cast<Eigen::Index>(conductors.size()));
    for (std::size_t k = 0; k < conductors.size(); ++k)
      i(static_cast<Eigen::Index>(k)) = sol.branch_currents[b][index_of(conductors[k])];
    const Eigen::VectorXcd drop = z * i;
    pb.line_losses += i.dot(drop);  // sum conj(i_k) * drop_k
  }

  const auto& tc = g.require_transformer();
  const auto yt = net::to_siemens(net::build_transformer_admittance(tc.model), tc.model).full();
  Eigen::Matrix<Complex, 6, 1> v;
  for (std::size_t k = 0; k < 3; ++k) {
    v(static_cast<Eigen::Index>(k)) = sol.voltages[tc.primary][k];
    v(static_cast<Eigen::Index>(k + 3)) = sol.voltages[tc.secondary][k];
  }
  const Eigen::Matrix<Complex, 6, 1> it = yt * v;
  for (Eigen::Index k = 0; k < 6; ++k) pb.transformer_losses += v(k) * std::conj(it(k));

  pb.residual_va = std::abs(pb.slack - pb.loads - pb.line_losses - pb.transformer_losses);
  return pb;
}

double max_kvl_residual(const PowerFlowSolution& sol, const net::GridModel& g) {
  double worst = 0.0;
  for (std::size_t b = 0; b < g.branches().size(); ++b) {
    const auto& br = g.branches()[b];
    std::vector<Phase> conductors;
    for (Phase p : g.branch_conductors(b))
      if (!(sol.mode == WiringMode::threewire && is_neutral(p))) conductors.push_back(p);
    const CMatrix z = g.branch_impedance(b, sol.mode);
    Eigen::VectorXcd i(static_cast<Eigen::Index>(conductors.size()));
    for (std::size_t k = 0; k < conductors.size(); ++k)
      i(static_cast<Eigen::Index>(k)) = sol.branch_currents[b][index_of(conductors[k])];
    const Eigen::VectorXcd drop = z * i;
    for (std::size_t k = 0; k < conductors.size(); ++k) {
      const Phase p = conductors[k];
      const Complex r = sol.voltage(br.from, p) - sol.voltage(br.to, p) - drop(static_cast<Eigen::Index>(k));
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

}  // namespace lvse::pf
