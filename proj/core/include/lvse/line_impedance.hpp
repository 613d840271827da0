#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lvse/types.hpp"

namespace lvse::net {

/// Modified Carson self impedance of a conductor with earth return, 50 Hz, 100 Ohm.m earth.
/// `r_ohm_per_km` is the conductor ac resistance, `gmr_m` its geometric mean radius.
Complex carson_self_impedance(double r_ohm_per_km, double gmr_m);

/// Modified Carson mutual impedance between two conductors spaced `distance_m` apart.
Complex carson_mutual_impedance(double distance_m);

struct Conductor {
  char role = 'p';  ///< 'a', 'b', 'c', 'p' (any phase) or 'n'
  double r_ohm_per_km = 0.0;
  double gmr_m = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
};

/// Cross-section layout of an overhead line: one entry per conductor.
class ConductorGeometry {
 public:
  explicit ConductorGeometry(std::vector<Conductor> conductors);

  std::size_t size() const { return conductors_.size(); }
  const Conductor& operator[](std::size_t i) const { return conductors_[i]; }
  const std::vector<Conductor>& conductors() const { return conductors_; }
  double spacing(std::size_t i, std::size_t j) const;
  std::string labels() const;

 private:
  std::vector<Conductor> conductors_;
};

/// Series impedance per unit length of a multi-conductor line, Ohm/km.
///
/// Labels name the conductor roles in row order using the same alphabet as
/// `Conductor::role`. At most one conductor is a neutral.
class LineImpedance {
 public:
  LineImpedance(CMatrix z_ohm_per_km, std::string labels);

  /// Resistance in Ohm/km and inductance in H/km, converted at 50 Hz.
  static LineImpedance from_resistance_inductance(const Matrix& r, const Matrix& l, std::string labels);
  static LineImpedance from_resistance_reactance(const Matrix& r, const Matrix& x, std::string labels);

  std::size_t conductor_count() const { return static_cast<std::size_t>(z_.rows()); }
  const CMatrix& z() const { return z_; }
  Complex operator()(std::size_t i, std::size_t j) const { return z_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  const std::string& labels() const { return labels_; }
  std::optional<std::size_t> neutral_index() const;
  bool has_neutral() const { return neutral_index().has_value(); }

  Matrix resistance() const { return z_.real(); }
  Matrix reactance() const { return z_.imag(); }
  Matrix inductance() const { return z_.imag() / kOmega; }

 private:
  friend LineImpedance kron_reduce(const LineImpedance& z);
  // Skips the self-vs-mutual resistance check, which a Kron-reduced matrix need not satisfy.
  struct Reduced {};
  LineImpedance(Reduced, CMatrix z_ohm_per_km, std::string labels);

  CMatrix z_;
  std::string labels_;
};

LineImpedance build_line_impedance(const ConductorGeometry& geometry);

/// Eliminates the neutral conductor assuming it sits at zero potential at both line ends.
LineImpedance kron_reduce(const LineImpedance& z);

/// Built-in 4x100 mm2 overhead aluminium line (a, b, c, n).
LineImpedance line_4x100();
/// Built-in 2x22 mm2 overhead aluminium service drop (one phase + neutral).
LineImpedance line_2x22();

}  // namespace lvse::net
