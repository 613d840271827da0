#include <cmath>
#include <numbers>

#include "lvse/error.hpp"
#include "lvse/powerflow.hpp"
#include "lvse/state.hpp"

namespace lvse::se {

StateLayout::StateLayout(const net::GridModel& g, const net::AdmittanceMatrix& y)
    : mode_(y.mode()), terminals_(y.terminals()), node_count_(g.node_count()) {
  const auto& tc = g.require_transformer();
  reference_node_ = tc.primary;
  const auto src = pf::source_voltages(tc.model);
  const double vbase = tc.model.phase_base_v();

  const std::size_t nt = terminals_.size();
  lookup_.assign(node_count_, {-1, -1, -1, -1});
  theta_col_.assign(nt, -1);
  mag_col_.assign(nt, -1);
  reference_v_.assign(nt, Complex{});

  // Terminals are grouped by node; give each group its angles, then its magnitudes.
  std::size_t col = 0;
  std::size_t t = 0;
  while (t < nt) {
    std::size_t end = t;
    while (end < nt && terminals_[end].node == terminals_[t].node) ++end;
    for (std::size_t k = t; k < end; ++k) {
      lookup_[terminals_[k].node][index_of(terminals_[k].phase)] = static_cast<int>(k);
      if (terminals_[k].node == reference_node_) {
        if (is_neutral(terminals_[k].phase)) throw ModelError("reference node carries a neutral terminal");
        reference_v_[k] = src[index_of(terminals_[k].phase)] / vbase;
      }
    }
    if (terminals_[t].node != reference_node_) {
      for (std::size_t k = t; k < end; ++k) theta_col_[k] = static_cast<int>(col++);
      for (std::size_t k = t; k < end; ++k) mag_col_[k] = static_cast<int>(col++);
    }
    t = end;
  }
  size_ = col;
  column_terminal_.assign(size_, 0);
  column_is_angle_.assign(size_, false);
  for (std::size_t k = 0; k < nt; ++k) {
    if (theta_col_[k] < 0) continue;
    column_terminal_[static_cast<std::size_t>(theta_col_[k])] = k;
    column_is_angle_[static_cast<std::size_t>(theta_col_[k])] = true;
    column_terminal_[static_cast<std::size_t>(mag_col_[k])] = k;
  }
}

std::optional<std::size_t> StateLayout::terminal_index(std::size_t node, Phase p) const {
  if (node >= lookup_.size()) return std::nullopt;
  const int k = lookup_[node][index_of(p)];
  if (k < 0) return std::nullopt;
  return static_cast<std::size_t>(k);
}

std::string StateLayout::column_label(std::size_t col, const net::GridModel& g) const {
  const auto& term = terminals_.at(column_terminal_.at(col));
  return std::string(column_is_angle_[col] ? "theta(" : "|V|(") + g.node(term.node).id + "." + to_char(term.phase) +
         ")";
}

StateVector::StateVector(std::shared_ptr<const StateLayout> layout, Vector x) : layout_(std::move(layout)), x_(std::move(x)) {
  if (!layout_) throw DomainError("state vector needs a layout");
  if (static_cast<std::size_t>(x_.size()) != layout_->size()) throw DomainError("state vector size mismatch");
}

StateVector StateVector::flat(std::shared_ptr<const StateLayout> layout, double lv_shift_deg, double neutral_pu) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout->size()));
  const double shift = lv_shift_deg * std::numbers::pi / 180.0;
  for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
    if (layout->is_reference(t)) continue;
    const Phase p = layout->terminal(t).phase;
    double theta = 0.0, mag = neutral_pu;
    if (!is_neutral(p)) {
      theta = shift - 2.0 * std::numbers::pi / 3.0 * static_cast<double>(index_of(p));
      theta = std::remainder(theta, 2.0 * std::numbers::pi);
      mag = 1.0;
    }
    x(layout->theta_col(t)) = theta;
    x(layout->mag_col(t)) = mag;
  }
  return StateVector(std::move(layout), std::move(x));
}

StateVector StateVector::from_voltages(std::shared_ptr<const StateLayout> layout, const CVector& v) {
  if (static_cast<std::size_t>(v.size()) != layout->terminal_count()) throw DomainError("voltage vector size mismatch");
  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout->size()));
  for (std::size_t t = 0; t < layout->terminal_count(); ++t) {
    if (layout->is_reference(t)) continue;
    const Complex vt = v(static_cast<Eigen::Index>(t));
    x(layout->theta_col(t)) = std::arg(vt);
    x(layout->mag_col(t)) = std::abs(vt);
  }
  return StateVector(std::move(layout), std::move(x));
}

double StateVector::theta(std::size_t t) const {
  if (layout_->is_reference(t)) return std::arg(layout_->reference_voltage(t));
  return x_(layout_->theta_col(t));
}

double StateVector::magnitude(std::size_t t) const {
  if (layout_->is_reference(t)) return std::abs(layout_->reference_voltage(t));
  return x_(layout_->mag_col(t));
}

CVector StateVector::voltages() const {
  CVector v(static_cast<Eigen::Index>(layout_->terminal_count()));
  for (std::size_t t = 0; t < layout_->terminal_count(); ++t)
    v(static_cast<Eigen::Index>(t)) =
        layout_->is_reference(t) ? layout_->reference_voltage(t) : magnitude(t) * std::polar(1.0, theta(t));
  return v;
}

CVector StateVector::unit_phasors() const {
  CVector e(static_cast<Eigen::Index>(layout_->terminal_count()));
  for (std::size_t t = 0; t < layout_->terminal_count(); ++t) e(static_cast<Eigen::Index>(t)) = std::polar(1.0, theta(t));
  return e;
}

}  // namespace lvse::se
