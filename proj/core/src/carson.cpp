#include <algorithm>
#include <cmath>

#include "lvse/error.hpp"
#include "lvse/line_impedance.hpp"

namespace lvse::net {

namespace {

// Modified Carson constants for 50 Hz and 100 Ohm.m earth resistivity (Ohm/km, metres).
constexpr double kEarthResistance = 0.0493;
constexpr double kReactanceFactor = 0.0628;
constexpr double kReferenceDistance = 0.3048;
constexpr double kEarthLogTerm = 8.0251;

constexpr double kSymmetryTolerance = 1e-12;

bool valid_role(char c) { return c == 'a' || c == 'b' || c == 'c' || c == 'p' || c == 'n'; }

}  // namespace

Complex carson_self_impedance(double r_ohm_per_km, double gmr_m) {
  if (!(r_ohm_per_km > 0.0)) throw DomainError("Carson self impedance: resistance must be positive");
  if (!(gmr_m > 0.0)) throw DomainError("Carson self impedance: GMR must be positive");
  return {r_ohm_per_km + kEarthResistance,
          kReactanceFactor * (std::log(kReferenceDistance / gmr_m) + kEarthLogTerm)};
}

Complex carson_mutual_impedance(double distance_m) {
  if (!(distance_m > 0.0)) throw DomainError("Carson mutual impedance: spacing must be positive");
  return {kEarthResistance, kReactanceFactor * (std::log(kReferenceDistance / distance_m) + kEarthLogTerm)};
}

ConductorGeometry::ConductorGeometry(std::vector<Conductor> conductors) : conductors_(std::move(conductors)) {
  if (conductors_.empty()) throw DomainError("conductor geometry has no conductors");
  std::size_t neutrals = 0;
  for (const auto& c : conductors_) {
    if (!valid_role(c.role)) throw DomainError(std::string("invalid conductor role '") + c.role + "'");
    if (!(c.r_ohm_per_km > 0.0)) throw DomainError("conductor resistance must be positive");
    if (!(c.gmr_m > 0.0)) throw DomainError("conductor GMR must be positive");
    if (c.role == 'n') ++neutrals;
  }
  if (neutrals > 1) throw DomainError("a line may carry at most one neutral conductor");
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j)
      if (!(spacing(i, j) > 0.0)) throw DomainError("coincident conductors in geometry");
}

double ConductorGeometry::spacing(std::size_t i, std::size_t j) const {
  return std::hypot(conductors_[i].x_m - conductors_[j].x_m, conductors_[i].y_m - conductors_[j].y_m);
}

std::string ConductorGeometry::labels() const {
  std::string s;
  for (const auto& c : conductors_) s.push_back(c.role);
  return s;
}

LineImpedance::LineImpedance(CMatrix z_ohm_per_km, std::string labels)
    : LineImpedance(Reduced{}, std::move(z_ohm_per_km), std::move(labels)) {
  const auto n = z_.rows();
  double min_self = z_.diagonal().real().minCoeff();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && !(z_(i, j).real() < min_self))
        throw DomainError("self resistances must exceed every mutual resistance");
}

LineImpedance::LineImpedance(Reduced, CMatrix z_ohm_per_km, std::string labels)
    : z_(std::move(z_ohm_per_km)), labels_(std::move(labels)) {
  const auto n = z_.rows();
  if (n == 0 || z_.cols() != n) throw DomainError("line impedance must be a non-empty square matrix");
  if (static_cast<std::size_t>(n) != labels_.size())
    throw DomainError("line impedance labels '" + labels_ + "' do not match a " + std::to_string(n) + "x" +
                      std::to_string(n) + " matrix");
  if (std::any_of(labels_.begin(), labels_.end(), [](char c) { return !valid_role(c); }))
    throw DomainError("invalid conductor label in '" + labels_ + "'");
  if (std::count(labels_.begin(), labels_.end(), 'n') > 1)
    throw DomainError("a line may carry at most one neutral conductor");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(z_(i, j) - z_(j, i)) > kSymmetryTolerance)
        throw DomainError("line impedance matrix is not symmetric");
}

LineImpedance LineImpedance::from_resistance_inductance(const Matrix& r, const Matrix& l, std::string labels) {
  return from_resistance_reactance(r, kOmega * l, std::move(labels));
}

LineImpedance LineImpedance::from_resistance_reactance(const Matrix& r, const Matrix& x, std::string labels) {
  if (r.rows() != x.rows() || r.cols() != x.cols()) throw DomainError("R and X matrices differ in shape");
  CMatrix z(r.rows(), r.cols());
  z.real() = r;
  z.imag() = x;
  return LineImpedance(std::move(z), std::move(labels));
}

std::optional<std::size_t> LineImpedance::neutral_index() const {
  auto pos = labels_.find('n');
  if (pos == std::string::npos) return std::nullopt;
  return pos;
}

LineImpedance build_line_impedance(const ConductorGeometry& geometry) {
  const auto n = static_cast<Eigen::Index>(geometry.size());
  CMatrix z(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ci = geometry[static_cast<std::size_t>(i)];
    z(i, i) = carson_self_impedance(ci.r_ohm_per_km, ci.gmr_m);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      z(i, j) = carson_mutual_impedance(geometry.spacing(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
      z(j, i) = z(i, j);
    }
  }
  return LineImpedance(std::move(z), geometry.labels());
}

LineImpedance kron_reduce(const LineImpedance& z) {
  auto neutral = z.neutral_index();
  if (!neutral) throw DomainError("Kron reduction needs a neutral conductor");
  const auto k = static_cast<Eigen::Index>(*neutral);
  const Complex znn = z.z()(k, k);
  if (std::abs(znn) < 1e-12) throw DomainError("singular neutral self impedance in Kron reduction");

  const auto n = static_cast<Eigen::Index>(z.conductor_count());
  CMatrix out(n - 1, n - 1);
  std::string labels;
  for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
    if (i == k) continue;
    labels.push_back(z.labels()[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0, oj = 0; j < n; ++j) {
      if (j == k) continue;
      out(oi, oj) = z.z()(i, j) - z.z()(i, k) * z.z()(k, j) / znn;
      ++oj;
    }
    ++oi;
  }
  return LineImpedance(LineImpedance::Reduced{}, std::move(out), std::move(labels));
}

LineImpedance line_4x100() {
  Matrix r(4, 4), l(4, 4);
  r << 0.3187, 0.0482, 0.0482, 0.0482,
       0.0482, 0.3187, 0.0482, 0.0483,
       0.0482, 0.0482, 0.3188, 0.0483,
       0.0482, 0.0483, 0.0483, 0.3188;
  l << 0.0024, 0.0016, 0.0014, 0.0013,
       0.0016, 0.0024, 0.0016, 0.0014,
       0.0014, 0.0016, 0.0024, 0.0016,
       0.0013, 0.0014, 0.0016, 0.0024;
  return LineImpedance::from_resistance_inductance(r, l, "abcn");
}

LineImpedance line_2x22() {
  Matrix r(2, 2), l(2, 2);
  r << 1.2753, 0.0482,
       0.0482, 1.2753;
  l << 0.0025, 0.0016,
       0.0016, 0.0025;
  return LineImpedance::from_resistance_inductance(r, l, "pn");
}

}  // namespace lvse::net
