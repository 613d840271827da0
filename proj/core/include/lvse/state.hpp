#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lvse/admittance.hpp"
#include "lvse/grid.hpp"
#include "lvse/types.hpp"

namespace lvse::se {

/// Maps admittance terminals to polar state variables.
///
/// Every terminal of the per-unit admittance except those of the reference
/// (MV source) node is a state pair. Per node the angles come first, then the
/// magnitudes, in phase order a, b, c, n.
class StateLayout {
 public:
  StateLayout(const net::GridModel& g, const net::AdmittanceMatrix& y);

  WiringMode mode() const { return mode_; }
  std::size_t size() const { return size_; }
  std::size_t terminal_count() const { return terminals_.size(); }
  const net::Terminal& terminal(std::size_t t) const { return terminals_[t]; }
  std::optional<std::size_t> terminal_index(std::size_t node, Phase p) const;

  std::size_t reference_node() const { return reference_node_; }
  bool is_reference(std::size_t t) const { return theta_col_[t] < 0; }
  /// Fixed per-unit voltage of a reference terminal.
  Complex reference_voltage(std::size_t t) const { return reference_v_[t]; }

  /// Column of the angle / magnitude variable of terminal `t`; -1 for reference terminals.
  int theta_col(std::size_t t) const { return theta_col_[t]; }
  int mag_col(std::size_t t) const { return mag_col_[t]; }

  /// Terminal owning state column `col`.
  std::size_t column_terminal(std::size_t col) const { return column_terminal_[col]; }
  bool column_is_angle(std::size_t col) const { return column_is_angle_[col]; }
  /// "theta(node.a)" style label of a state column.
  std::string column_label(std::size_t col, const net::GridModel& g) const;

  std::size_t node_count() const { return node_count_; }

 private:
  WiringMode mode_;
  std::vector<net::Terminal> terminals_;
  std::vector<std::array<int, 4>> lookup_;
  std::vector<int> theta_col_, mag_col_;
  std::vector<Complex> reference_v_;
  std::vector<std::size_t> column_terminal_;
  std::vector<bool> column_is_angle_;
  std::size_t reference_node_ = 0;
  std::size_t size_ = 0;
  std::size_t node_count_ = 0;
};

/// Polar state over a layout: x = [theta..., |V|...] per node, radians and pu.
class StateVector {
 public:
  StateVector(std::shared_ptr<const StateLayout> layout, Vector x);

  /// 1 pu magnitudes, phase angles 0/-120/120 degrees plus `lv_shift_deg`; neutrals
  /// start at `neutral_pu` with angle 0.
  static StateVector flat(std::shared_ptr<const StateLayout> layout, double lv_shift_deg,
                          double neutral_pu = 0.0);
  /// Polar state of per-unit terminal voltages (reference terminals ignored).
  static StateVector from_voltages(std::shared_ptr<const StateLayout> layout, const CVector& v);

  const StateLayout& layout() const { return *layout_; }
  const std::shared_ptr<const StateLayout>& layout_ptr() const { return layout_; }
  const Vector& values() const { return x_; }
  Vector& values() { return x_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.size()); }

  double theta(std::size_t t) const;
  double magnitude(std::size_t t) const;
  /// Per-unit complex voltages of all terminals, reference included.
  CVector voltages() const;
  /// Unit phasor exp(j theta) of every terminal.
  CVector unit_phasors() const;

 private:
  std::shared_ptr<const StateLayout> layout_;
  Vector x_;
};

}  // namespace lvse::se
