#include <cmath>

#include <Eigen/LU>

#include "lvse/admittance.hpp"
#include "lvse/error.hpp"

namespace lvse::net {

AdmittanceMatrix::AdmittanceMatrix(WiringMode mode, std::vector<Terminal> terminals, std::size_t node_count,
                                   SparseCMatrix y)
    : mode_(mode), terminals_(std::move(terminals)), y_(std::move(y)) {
  if (y_.rows() != static_cast<Eigen::Index>(terminals_.size()) || y_.cols() != y_.rows())
    throw DomainError("admittance matrix size does not match its terminal list");
  lookup_.assign(node_count, {-1, -1, -1, -1});
  for (std::size_t i = 0; i < terminals_.size(); ++i) {
    const auto& t = terminals_[i];
    if (t.node >= node_count) throw DomainError("terminal references an unknown node");
    auto& slot = lookup_[t.node][index_of(t.phase)];
    if (slot != -1) throw DomainError("duplicate terminal in admittance matrix");
    slot = static_cast<int>(i);
  }
}

std::optional<std::size_t> AdmittanceMatrix::index(std::size_t node, Phase p) const {
  if (node >= lookup_.size()) return std::nullopt;
  int i = lookup_[node][index_of(p)];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

AdmittanceMatrix AdmittanceMatrix::scaled(double factor) const {
  return AdmittanceMatrix(mode_, terminals_, lookup_.size(), SparseCMatrix(y_ * Complex(factor, 0.0)));
}

AdmittanceMatrix assemble_admittance(const GridModel& g, WiringMode mode, const AssemblyOptions& options) {
  std::vector<Terminal> terminals;
  std::vector<std::array<int, 4>> at(g.node_count(), {-1, -1, -1, -1});
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    for (Phase p : g.node(i).phases.members()) {
      if (is_neutral(p) && (mode == WiringMode::threewire || g.neutral_grounded(i))) continue;
      at[i][index_of(p)] = static_cast<int>(terminals.size());
      terminals.push_back({i, p});
    }
  }

  std::vector<Eigen::Triplet<Complex>> entries;
  auto stamp = [&](int r, int c, Complex v) {
    if (r >= 0 && c >= 0) entries.emplace_back(r, c, v);
  };

  for (std::size_t b = 0; b < g.branches().size(); ++b) {
    const auto& br = g.branches()[b];
    std::vector<Phase> conductors;
    for (Phase p : g.branch_conductors(b))
      if (!(mode == WiringMode::threewire && is_neutral(p))) conductors.push_back(p);
    const CMatrix z = g.branch_impedance(b, mode);
    Eigen::FullPivLU<CMatrix> lu(z);
    if (!lu.isInvertible())
      throw ModelError("singular impedance on branch " + g.node(br.from).id + "-" + g.node(br.to).id);
    const CMatrix y = lu.inverse();
    for (std::size_t i = 0; i < conductors.size(); ++i) {
      const int fi = at[br.from][index_of(conductors[i])];
      const int ti = at[br.to][index_of(conductors[i])];
      for (std::size_t j = 0; j < conductors.size(); ++j) {
        const int fj = at[br.from][index_of(conductors[j])];
        const int tj = at[br.to][index_of(conductors[j])];
        const Complex v = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        stamp(fi, fj, v);
        stamp(ti, tj, v);
        stamp(fi, tj, -v);
        stamp(ti, fj, -v);
      }
    }
  }

  if (const auto& tc = g.transformer()) {
    const auto y = to_siemens(build_transformer_admittance(tc->model), tc->model).full();
    std::array<int, 6> idx{};
    for (std::size_t k = 0; k < 3; ++k) {
      idx[k] = at[tc->primary][k];
      idx[k + 3] = at[tc->secondary][k];
    }
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 6; ++c) stamp(idx[r], idx[c], y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  }

  if (options.stamp_constant_impedance_loads) {
    const double vbase = g.transformer() ? g.transformer()->model.phase_base_v() : 416.0 / std::sqrt(3.0);
    for (const auto& load : g.loads()) {
      if (load.model != LoadModel::constant_impedance) continue;
      const Complex y = std::conj(load.power()) / (vbase * vbase);
      const int p = at[load.node][index_of(load.phase)];
      const int n = at[load.node][index_of(Phase::n)];
      stamp(p, p, y);
      stamp(n, n, y);
      stamp(p, n, -y);
      stamp(n, p, -y);
    }
  }

  SparseCMatrix ymat(static_cast<Eigen::Index>(terminals.size()), static_cast<Eigen::Index>(terminals.size()));
  ymat.setFromTriplets(entries.begin(), entries.end());
  ymat.makeCompressed();
  return AdmittanceMatrix(mode, std::move(terminals), g.node_count(), std::move(ymat));
}

}  // namespace lvse::net
