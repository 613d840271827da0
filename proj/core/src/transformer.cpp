#include <cmath>

#include "lvse/error.hpp"
#include "lvse/transformer.hpp"

namespace lvse::net {

void TransformerModel::validate() const {
  if (!(rated_va > 0.0)) throw DomainError("transformer rated power must be positive");
  if (!(primary_ll_v > 0.0) || !(secondary_ll_v > 0.0)) throw DomainError("transformer voltages must be positive");
  if (!(std::abs(leakage_admittance_pu) > 0.0)) throw DomainError("transformer leakage admittance must be nonzero");
  if (!secondary_grounded) throw DomainError("only a solidly grounded secondary neutral is supported");
  if (std::abs(std::abs(phase_shift_deg) - 30.0) > 1e-9)
    throw DomainError("a delta/grounded-wye transformer shifts the LV side by -30 or +30 degrees");
}

double TransformerModel::phase_base_v() const { return secondary_ll_v / std::sqrt(3.0); }

double TransformerModel::impedance_base_ohm() const { return secondary_ll_v * secondary_ll_v / rated_va; }

Complex TransformerModel::admittance_from_impedance(double r_pu, double x_pu) {
  Complex z{r_pu, x_pu};
  if (std::abs(z) == 0.0) throw DomainError("transformer leakage impedance must be nonzero");
  return 1.0 / z;
}

Eigen::Matrix<Complex, 6, 6> TransformerAdmittance::full() const {
  Eigen::Matrix<Complex, 6, 6> y;
  y << pp, ps, sp, ss;
  return y;
}

TransformerAdmittance build_transformer_admittance(const TransformerModel& t) {
  t.validate();
  const Complex yt = t.leakage_admittance_pu;

  Eigen::Matrix3d delta;
  delta << 2, -1, -1,
          -1, 2, -1,
          -1, -1, 2;
  // Primary line-to-line voltages couple into secondary phase-to-neutral windings.
  // This orientation lags the LV side by 30 degrees; its transpose leads by 30.
  Eigen::Matrix3d cross;
  cross << -1, 1, 0,
            0, -1, 1,
            1, 0, -1;
  if (t.phase_shift_deg > 0.0) cross.transposeInPlace();

  TransformerAdmittance y;
  y.pp = delta.cast<Complex>() * (yt / 3.0);
  y.ps = cross.cast<Complex>() * (yt / std::sqrt(3.0));
  y.sp = y.ps.transpose();
  y.ss = Eigen::Matrix3cd::Identity() * yt;
  return y;
}

TransformerAdmittance to_siemens(const TransformerAdmittance& pu, const TransformerModel& t) {
  const double zbase = t.impedance_base_ohm();
  return {pu.pp / zbase, pu.ps / zbase, pu.sp / zbase, pu.ss / zbase};
}

}  // namespace lvse::net
