#pragma once

#include "lvse/types.hpp"

namespace lvse::net {

/// Delta / grounded-wye distribution transformer.
struct TransformerModel {
  double rated_va = 800e3;
  double primary_ll_v = 11e3;
  double secondary_ll_v = 416.0;
  Complex leakage_admittance_pu{0.0, 0.0};
  /// Angle of the no-load LV phase voltages relative to the MV phase voltages.
  double phase_shift_deg = -30.0;
  bool secondary_grounded = true;

  void validate() const;

  /// Secondary phase-to-neutral base voltage, V.
  double phase_base_v() const;
  /// Per-phase base power, VA.
  double phase_base_va() const { return rated_va / 3.0; }
  /// Impedance base on the secondary side, Ohm.
  double impedance_base_ohm() const;

  static Complex admittance_from_impedance(double r_pu, double x_pu);
};

/// The 6x6 two-winding admittance split into primary/secondary 3x3 blocks.
struct TransformerAdmittance {
  Eigen::Matrix3cd pp;
  Eigen::Matrix3cd ps;
  Eigen::Matrix3cd sp;
  Eigen::Matrix3cd ss;

  Eigen::Matrix<Complex, 6, 6> full() const;
};

/// Per-unit admittance blocks on the transformer base.
TransformerAdmittance build_transformer_admittance(const TransformerModel& t);

/// Converts per-unit blocks to Siemens with the MV side referred to the LV voltage base
/// (so 1 pu on either side is `phase_base_v()` volts).
TransformerAdmittance to_siemens(const TransformerAdmittance& pu, const TransformerModel& t);

}  // namespace lvse::net
