#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "lvse/error.hpp"
#include "lvse/estimator.hpp"

namespace lvse::se {
namespace {

constexpr double kMinRcond = 1e-13;

// Ruiz equilibration: returns row and column scales so that diag(r) K diag(c)
// has entries of magnitude at most about one in every row and column.
void equilibrate(Matrix& k, Vector& r, Vector& c) {
  r = Vector::Ones(k.rows());
  c = Vector::Ones(k.cols());
  for (int pass = 0; pass < 8; ++pass) {
    Vector dr(k.rows()), dc(k.cols());
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const double m = k.row(i).cwiseAbs().maxCoeff();
      dr(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
    }
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      const double m = k.col(j).cwiseAbs().maxCoeff();
      dc(j) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
    }
    k = dr.asDiagonal() * k * dc.asDiagonal();
    r.array() *= dr.array();
    c.array() *= dc.array();
  }
}

[[noreturn]] void report_deficiency(const Matrix& k, const Vector& col_scale, Eigen::Index n,
                                    const std::function<std::string(std::size_t)>& label) {
  const Eigen::BDCSVD<Matrix> svd(k, Eigen::ComputeFullV);
  const Vector null = col_scale.cwiseProduct(svd.matrixV().col(k.cols() - 1));
  Eigen::Index worst = 0;
  if (n > 0 && null.head(n).cwiseAbs().maxCoeff() > 0.0) {
    null.head(n).cwiseAbs().maxCoeff(&worst);
    const auto col = static_cast<std::size_t>(worst);
    throw ObservabilityError("state variable not observable: " + (label ? label(col) : "column " + std::to_string(col)));
  }
  null.tail(k.cols() - n).cwiseAbs().maxCoeff(&worst);
  throw ObservabilityError("constraint " + std::to_string(worst) + " is redundant or inconsistent");
}

}  // namespace

KktSolution kkt_step(const Matrix& h, const Vector& r_diag, const Vector& dz, const Matrix& c_jac, const Vector& c,
                     const std::function<std::string(std::size_t)>& label) {
  const Eigen::Index n = h.cols();
  const Eigen::Index m = c_jac.rows();
  if (h.rows() != r_diag.size() || h.rows() != dz.size()) throw DomainError("measurement dimensions disagree");
  if (m != c.size() || (m > 0 && c_jac.cols() != n)) throw DomainError("constraint dimensions disagree");
  if ((r_diag.array() <= 0.0).any()) throw DomainError("covariance must be positive");

  const Vector w = r_diag.cwiseInverse();
  Matrix k = Matrix::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = h.transpose() * w.asDiagonal() * h;
  if (m > 0) {
    k.topRightCorner(n, m) = -c_jac.transpose();
    k.bottomLeftCorner(m, n) = c_jac;
  }
  Vector rhs(n + m);
  rhs.head(n) = h.transpose() * w.cwiseProduct(dz);
  rhs.tail(m) = -c;

  Vector rs, cs;
  equilibrate(k, rs, cs);
  const Eigen::PartialPivLU<Matrix> lu(k);
  const Vector piv = lu.matrixLU().diagonal().cwiseAbs();
  if (!(lu.rcond() > kMinRcond) || !(piv.minCoeff() > kMinRcond * piv.maxCoeff())) report_deficiency(k, cs, n, label);
  const Vector sol = cs.cwiseProduct(lu.solve(rs.cwiseProduct(rhs)));
  if (!sol.allFinite()) report_deficiency(k, cs, n, label);
  return {sol.head(n), sol.tail(m)};
}

}  // namespace lvse::se
