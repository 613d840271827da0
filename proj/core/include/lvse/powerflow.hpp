#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lvse/grid.hpp"
#include "lvse/types.hpp"

namespace lvse::pf {

using NodeVoltages = std::array<Complex, 4>;

/// A phase-to-neutral injection consumed by the sweep: constant power (VA) or
/// constant admittance (S). Consumption is positive.
struct LoadInjection {
  std::size_t node = 0;
  Phase phase = Phase::a;
  Complex power{0.0, 0.0};
  std::optional<Complex> admittance;

  static LoadInjection constant_power(std::size_t node, Phase p, Complex s) { return {node, p, s, std::nullopt}; }
  static LoadInjection constant_impedance(std::size_t node, Phase p, Complex y) { return {node, p, {0.0, 0.0}, y}; }
};

/// The grid's own loads; constant-impedance loads get their admittance at the nominal phase voltage.
std::vector<LoadInjection> loads_from_grid(const net::GridModel& g);

/// Phase current drawn by a phase-to-neutral load of apparent power `s`.
/// The neutral carries the negative sum of the phase currents at the node.
Complex injected_current(Complex s, Complex v_phase, Complex v_neutral);

struct PowerFlowOptions {
  WiringMode mode = WiringMode::fourwire;
  int max_iterations = 100;
  /// Infinity norm of the voltage update, per unit of the LV phase base.
  double tolerance_pu = 1e-8;
  /// Stop after `max_iterations` without raising; the solution is flagged unconverged.
  bool allow_unconverged = false;
};

struct PowerFlowSolution {
  WiringMode mode = WiringMode::fourwire;
  /// Per node, indexed by `Phase`; absent conductors hold 0. MV source voltages are
  /// referred to the LV base.
  std::vector<NodeVoltages> voltages;
  /// Per branch, indexed by `Phase`, from-node to to-node.
  std::vector<NodeVoltages> branch_currents;
  /// Power delivered by the MV source per phase, W + j var.
  std::array<Complex, 3> slack_power{};
  int iterations = 0;
  double max_update_pu = 0.0;
  bool converged = false;

  Complex voltage(std::size_t node, Phase p) const { return voltages[node][index_of(p)]; }
  /// Phase-to-neutral voltage seen by a meter at `node`.
  Complex meter_voltage(std::size_t node, Phase p) const {
    return voltages[node][index_of(p)] - voltages[node][index_of(Phase::n)];
  }
  Complex total_slack_power() const { return slack_power[0] + slack_power[1] + slack_power[2]; }
};

/// Radial backward/forward sweep over all conductors.
///
/// Backward: load currents from `injected_current`, accumulated leaf to root with
/// the neutral carrying returns. Forward: V_to = V_from - Z I conductor-wise.
/// The LV root is updated from the ideal MV source through the transformer
/// admittance. With the neutral grounded everywhere the neutral branch currents
/// follow from zero neutral potential, which equals the Kron-reduced model.
PowerFlowSolution solve_bfs(const net::GridModel& g, std::span<const LoadInjection> loads,
                            const PowerFlowOptions& options = {});
PowerFlowSolution solve_bfs(const net::GridModel& g, const PowerFlowOptions& options = {});

struct PowerBalance {
  Complex slack{0.0, 0.0};
  Complex loads{0.0, 0.0};
  Complex line_losses{0.0, 0.0};
  Complex transformer_losses{0.0, 0.0};
  /// |slack - loads - losses|, VA.
  double residual_va = 0.0;
  /// Residual relative to the total load apparent power (0 when unloaded).
  double relative() const;
};

/// Conservation diagnostic recomputed from the solution's voltages and currents.
/// Constant-power loads enter with their specified power.
PowerBalance power_balance_check(const PowerFlowSolution& sol, const net::GridModel& g,
                                 std::span<const LoadInjection> loads);
PowerBalance power_balance_check(const PowerFlowSolution& sol, const net::GridModel& g);

/// Largest conductor-wise KVL mismatch |V_from - V_to - Z I| over all branches, V.
double max_kvl_residual(const PowerFlowSolution& sol, const net::GridModel& g);

/// Balanced MV source voltages referred to the LV base, V.
std::array<Complex, 3> source_voltages(const net::TransformerModel& t);

}  // namespace lvse::pf
