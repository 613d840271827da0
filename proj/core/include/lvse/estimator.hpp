#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lvse/admittance.hpp"
#include "lvse/grid.hpp"
#include "lvse/metering.hpp"
#include "lvse/powerflow.hpp"
#include "lvse/state.hpp"

namespace lvse::se {

/// Per-unit admittance of `g` without load shunts: Y_SI times the LV impedance base.
net::AdmittanceMatrix per_unit_admittance(const net::GridModel& g, WiringMode mode);

enum class RowKind { p_inj, q_inj, vmag, vmag_phase_neutral, vn_mag, theta_n };

/// One measurement function: injection at `terminal` referred to `neutral`
/// (-1 means ground), or a state magnitude/angle.
struct Row {
  RowKind kind = RowKind::p_inj;
  int terminal = -1;
  int neutral = -1;
};

/// Power rows at zero-injection nodes, V_p conj(I_p) for every power phase.
/// A listed node carrying a load raises ModelError.
std::vector<Row> constraint_rows(const net::GridModel& g, const StateLayout& layout,
                                 const std::vector<std::size_t>& zero_injection_nodes);
std::vector<Row> constraint_rows(const net::GridModel& g, const StateLayout& layout);

/// Injection, voltage and virtual rows evaluated on a per-unit state.
class MeasurementModel {
 public:
  /// Converts `ms` to per unit. In three-wire layouts meter power is referred to
  /// ground and virtual records are dropped. `phase_neutral_vmag` keeps |V| rows as
  /// |V_p - V_n| instead of the state magnitude.
  MeasurementModel(const net::GridModel& g, std::shared_ptr<const StateLayout> layout,
                   const meter::MeasurementSet& ms, bool phase_neutral_vmag = false);
  /// Rows given directly (values in pu).
  MeasurementModel(std::shared_ptr<const StateLayout> layout, std::vector<Row> rows, Vector z, Vector sigma);

  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const Vector& z() const { return z_; }
  const Vector& sigma() const { return sigma_; }
  /// 1 / sigma^2.
  Vector weights() const;

 private:
  std::shared_ptr<const StateLayout> layout_;
  std::vector<Row> rows_;
  Vector z_, sigma_;
};

/// h(x) for `rows` on admittance `y`.
Vector eval_h(const StateVector& x, const net::AdmittanceMatrix& y, const std::vector<Row>& rows);
/// Analytic dh/dx, one row per entry of `rows`.
Matrix eval_jacobian(const StateVector& x, const net::AdmittanceMatrix& y, const std::vector<Row>& rows);

struct Constraints {
  Vector c;
  Matrix jacobian;
};

/// Zero-injection equality constraints and their Jacobian.
Constraints eval_constraints(const StateVector& x, const net::AdmittanceMatrix& y, const net::GridModel& g);

struct KktSolution {
  Vector dx;
  Vector lambda;
};

/// Solves [H'WH, -C'; C, 0] [dx; lambda] = [H'W dz; -c] with W = R^-1.
/// `r_diag` holds the diagonal of R. A singular system raises ObservabilityError
/// naming the variable `label(col)` most involved in the rank deficiency.
KktSolution kkt_step(const Matrix& h, const Vector& r_diag, const Vector& dz, const Matrix& c_jac, const Vector& c,
                     const std::function<std::string(std::size_t)>& label = {});

struct EstimationConfig {
  WiringMode mode = WiringMode::fourwire;
  double tolerance = 1e-6;
  int max_iterations = 50;
  int max_step_halvings = 4;
  double neutral_floor_pu = 1e-9;
  /// Constraint residual required at convergence, pu.
  double constraint_tolerance = 1e-8;
  /// Keep |V| rows phase-to-neutral (diagnostic; disables the voltage correction).
  bool phase_neutral_vmag = false;
  /// Virtual neutral magnitude sigma; defaults to the meter voltage sigma.
  std::optional<double> virtual_sigma_pu;
  double virtual_angle_weight = 10.0;
  /// Return unconverged results instead of raising ConvergenceError.
  bool allow_unconverged = false;
  /// Tolerance of the power flow in the four-wire pipeline, pu.
  double power_flow_tolerance_pu = 1e-12;
};

struct IterationTrace {
  int iteration = 0;
  double dx_inf = 0.0;
  double objective = 0.0;
  double constraint_inf = 0.0;
  /// Step started from a point satisfying the constraints.
  bool feasible_start = false;
  int halvings = 0;
  /// J + mu |c|_1 before and after the step, with mu fixed from the step's multipliers.
  double merit_start = 0.0;
  double merit_end = 0.0;
};

struct EstimationResult {
  WiringMode mode = WiringMode::fourwire;
  std::optional<StateVector> state;
  /// Per node, indexed by Phase, pu; grounded or absent conductors hold 0.
  std::vector<pf::NodeVoltages> voltages;
  Vector lambda;
  /// z - h(x) in pu, and divided by sigma.
  Vector residuals;
  Vector normalized_residuals;
  double objective = 0.0;
  double constraint_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  std::size_t measurement_count = 0;
  std::size_t state_count = 0;
  std::size_t constraint_count = 0;
  std::vector<IterationTrace> trace;

  Complex voltage(std::size_t node, Phase p) const { return voltages[node][index_of(p)]; }
  /// Rows `node,phase,theta_rad,vmag_pu` after a metadata comment.
  std::string to_csv(const net::GridModel& g) const;
};

/// Constrained Gauss-Newton from `start` on a prepared model.
EstimationResult solve_wls(const net::GridModel& g, const net::AdmittanceMatrix& y, const MeasurementModel& model,
                           StateVector start, const EstimationConfig& config);

/// Three-wire estimator: Kron-reduced lines, meter voltages taken as phase-to-ground.
EstimationResult run_cwls(const net::GridModel& g, const meter::MeasurementSet& ms, EstimationConfig config = {});

/// Replaces every meter |V| by ||V| angle(theta_i) + V_n| using angles and neutral
/// voltages of `pf`. Virtual records are kept as they are.
meter::MeasurementSet correct_voltage_measurements(const meter::MeasurementSet& ms, const pf::PowerFlowSolution& pf,
                                                   const net::GridModel& g);

/// Constant-power loads equal to the metered consumption.
std::vector<pf::LoadInjection> loads_from_measurements(const meter::MeasurementSet& ms);

/// Four-wire pipeline: power flow from metered P/Q, virtual neutral rows,
/// voltage correction, then the estimator warm-started from the power flow.
EstimationResult run_nwls(const net::GridModel& g, const meter::MeasurementSet& ms, EstimationConfig config = {});

/// Dispatches on `config.mode`.
EstimationResult run_estimator(const net::GridModel& g, const meter::MeasurementSet& ms,
                               const EstimationConfig& config);

}  // namespace lvse::se
