#include <cmath>

#include "lvse/error.hpp"
#include "lvse/estimator.hpp"

namespace lvse::se {
namespace {

constexpr Complex kJ{0.0, 1.0};

struct Bases {
  double v = 0.0;
  double s = 0.0;
};

Bases bases_of(const net::GridModel& g) {
  const auto& m = g.require_transformer().model;
  return {m.phase_base_v(), m.phase_base_va()};
}

std::size_t require_terminal(const StateLayout& layout, const net::GridModel& g, std::size_t node, Phase p) {
  auto t = layout.terminal_index(node, p);
  if (!t || layout.is_reference(*t))
    throw ModelError(std::string("no state for ") + g.node(node).id + "." + to_char(p));
  return *t;
}

void check_rows(const StateVector& x, const net::AdmittanceMatrix& y, const std::vector<Row>& rows) {
  const auto& layout = x.layout();
  if (layout.mode() != y.mode() || layout.terminal_count() != y.size())
    throw DomainError("state layout and admittance disagree");
  const int nt = static_cast<int>(y.size());
  for (const auto& r : rows) {
    if (r.terminal < 0 || r.terminal >= nt || r.neutral >= nt) throw DomainError("measurement row index out of range");
    const bool needs_state = r.kind == RowKind::vmag || r.kind == RowKind::vn_mag || r.kind == RowKind::theta_n;
    if (needs_state && layout.is_reference(static_cast<std::size_t>(r.terminal)))
      throw DomainError("measurement row refers to the reference node");
  }
}

}  // namespace

net::AdmittanceMatrix per_unit_admittance(const net::GridModel& g, WiringMode mode) {
  net::AssemblyOptions opts;
  opts.stamp_constant_impedance_loads = false;
  return net::assemble_admittance(g, mode, opts).scaled(g.require_transformer().model.impedance_base_ohm());
}

std::vector<Row> constraint_rows(const net::GridModel& g, const StateLayout& layout,
                                 const std::vector<std::size_t>& zero_injection_nodes) {
  std::vector<Row> rows;
  for (std::size_t node : zero_injection_nodes) {
    if (g.has_load(node)) throw ModelError("zero-injection node '" + g.node(node).id + "' carries a load");
    if (node == layout.reference_node()) continue;
    for (Phase p : g.node(node).phases.without_neutral().members()) {
      const int t = static_cast<int>(require_terminal(layout, g, node, p));
      rows.push_back({RowKind::p_inj, t, -1});
      rows.push_back({RowKind::q_inj, t, -1});
    }
  }
  return rows;
}

std::vector<Row> constraint_rows(const net::GridModel& g, const StateLayout& layout) {
  return constraint_rows(g, layout, g.zero_injection_nodes());
}

MeasurementModel::MeasurementModel(const net::GridModel& g, std::shared_ptr<const StateLayout> layout,
                                   const meter::MeasurementSet& ms, bool phase_neutral_vmag)
    : layout_(std::move(layout)) {
  const Bases b = bases_of(g);
  const bool four = layout_->mode() == WiringMode::fourwire;
  std::vector<double> z, sigma;
  auto neutral_of = [&](std::size_t node) {
    if (!four) return -1;
    auto n = layout_->terminal_index(node, Phase::n);
    return n ? static_cast<int>(*n) : -1;
  };
  for (const auto& m : ms.records()) {
    Row r;
    double scale = 1.0;
    switch (m.kind) {
      case meter::Kind::p_inj:
      case meter::Kind::q_inj:
        r.kind = m.kind == meter::Kind::p_inj ? RowKind::p_inj : RowKind::q_inj;
        r.terminal = static_cast<int>(require_terminal(*layout_, g, m.node, m.phase));
        r.neutral = neutral_of(m.node);
        scale = b.s;
        break;
      case meter::Kind::vmag:
        r.terminal = static_cast<int>(require_terminal(*layout_, g, m.node, m.phase));
        r.neutral = neutral_of(m.node);
        r.kind = phase_neutral_vmag && r.neutral >= 0 ? RowKind::vmag_phase_neutral : RowKind::vmag;
        if (r.kind == RowKind::vmag) r.neutral = -1;
        scale = b.v;
        break;
      case meter::Kind::vn_mag_virtual:
      case meter::Kind::thetan_virtual:
        if (!four) continue;
        r.kind = m.kind == meter::Kind::vn_mag_virtual ? RowKind::vn_mag : RowKind::theta_n;
        r.terminal = static_cast<int>(require_terminal(*layout_, g, m.node, Phase::n));
        break;
    }
    rows_.push_back(r);
    z.push_back(m.value / scale);
    sigma.push_back(m.sigma / scale);
  }
  z_ = Eigen::Map<Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
  sigma_ = Eigen::Map<Vector>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
}

MeasurementModel::MeasurementModel(std::shared_ptr<const StateLayout> layout, std::vector<Row> rows, Vector z,
                                   Vector sigma)
    : layout_(std::move(layout)), rows_(std::move(rows)), z_(std::move(z)), sigma_(std::move(sigma)) {
  if (static_cast<std::size_t>(z_.size()) != rows_.size() || sigma_.size() != z_.size())
    throw DomainError("measurement model size mismatch");
  if ((sigma_.array() <= 0.0).any()) throw DomainError("measurement sigma must be positive");
}

Vector MeasurementModel::weights() const { return sigma_.array().square().inverse().matrix(); }

Vector eval_h(const StateVector& x, const net::AdmittanceMatrix& y, const std::vector<Row>& rows) {
  check_rows(x, y, rows);
  const CVector v = x.voltages();
  const CVector cur = y.matrix() * v;
  Vector h(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const auto t = static_cast<std::size_t>(r.terminal);
    const Complex vn = r.neutral >= 0 ? v(r.neutral) : Complex{};
    const Complex w = v(r.terminal) - vn;
    double val = 0.0;
    switch (r.kind) {
      case RowKind::p_inj: val = (w * std::conj(cur(r.terminal))).real(); break;
      case RowKind::q_inj: val = (w * std::conj(cur(r.terminal))).imag(); break;
      case RowKind::vmag:
      case RowKind::vn_mag: val = x.magnitude(t); break;
      case RowKind::vmag_phase_neutral: val = std::abs(w); break;
      case RowKind::theta_n: val = x.theta(t); break;
    }
    h(static_cast<Eigen::Index>(i)) = val;
  }
  return h;
}

Matrix eval_jacobian(const StateVector& x, const net::AdmittanceMatrix& y, const std::vector<Row>& rows) {
  check_rows(x, y, rows);
  const auto& layout = x.layout();
  const CVector v = x.voltages();
  const CVector e = x.unit_phasors();
  const CVector cur = y.matrix() * v;
  Matrix hm = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(layout.size()));

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const auto ri = static_cast<Eigen::Index>(i);
    const auto t = static_cast<std::size_t>(r.terminal);
    switch (r.kind) {
      case RowKind::vmag:
      case RowKind::vn_mag: hm(ri, layout.mag_col(t)) = 1.0; continue;
      case RowKind::theta_n: hm(ri, layout.theta_col(t)) = 1.0; continue;
      default: break;
    }
    const Complex vn = r.neutral >= 0 ? v(r.neutral) : Complex{};
    const Complex w = v(r.terminal) - vn;

    if (r.kind == RowKind::vmag_phase_neutral) {
      const double aw = std::abs(w);
      if (!(aw > 0.0)) throw DomainError("phase-to-neutral voltage vanished");
      auto add = [&](int term, double sign) {
        const auto k = static_cast<std::size_t>(term);
        if (layout.is_reference(k)) return;
        hm(ri, layout.theta_col(k)) += sign * (std::conj(w) * kJ * v(term)).real() / aw;
        hm(ri, layout.mag_col(k)) += sign * (std::conj(w) * e(term)).real() / aw;
      };
      add(r.terminal, 1.0);
      if (r.neutral >= 0) add(r.neutral, -1.0);
      continue;
    }

    // dS = dw conj(I_t) + w conj(Y_t. dV)
    const bool real_part = r.kind == RowKind::p_inj;
    auto put = [&](std::size_t k, Complex ds_theta, Complex ds_mag) {
      if (layout.is_reference(k)) return;
      hm(ri, layout.theta_col(k)) += real_part ? ds_theta.real() : ds_theta.imag();
      hm(ri, layout.mag_col(k)) += real_part ? ds_mag.real() : ds_mag.imag();
    };
    const Complex ci = std::conj(cur(r.terminal));
    put(t, kJ * v(r.terminal) * ci, e(r.terminal) * ci);
    if (r.neutral >= 0) put(static_cast<std::size_t>(r.neutral), -kJ * v(r.neutral) * ci, -e(r.neutral) * ci);
    for (net::SparseCMatrix::InnerIterator it(y.matrix(), r.terminal); it; ++it) {
      const auto k = static_cast<std::size_t>(it.col());
      const Complex yk = it.value();
      put(k, w * std::conj(yk * kJ * v(it.col())), w * std::conj(yk * e(it.col())));
    }
  }
  return hm;
}

Constraints eval_constraints(const StateVector& x, const net::AdmittanceMatrix& y, const net::GridModel& g) {
  const auto rows = constraint_rows(g, x.layout());
  return {eval_h(x, y, rows), eval_jacobian(x, y, rows)};
}

}  // namespace lvse::se
