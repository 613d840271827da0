#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "lvse/grid.hpp"
#include "lvse/types.hpp"

namespace lvse::net {

struct Terminal {
  std::size_t node = 0;
  Phase phase = Phase::a;
  friend bool operator==(const Terminal&, const Terminal&) = default;
};

using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Nodal admittance over (node, phase) terminals, Siemens.
///
/// Grounded neutral terminals are eliminated (known zero voltage). In
/// three-wire mode no neutral terminal exists at all.
class AdmittanceMatrix {
 public:
  AdmittanceMatrix(WiringMode mode, std::vector<Terminal> terminals, std::size_t node_count, SparseCMatrix y);

  WiringMode mode() const { return mode_; }
  std::size_t size() const { return terminals_.size(); }
  const std::vector<Terminal>& terminals() const { return terminals_; }
  const Terminal& terminal(std::size_t i) const { return terminals_[i]; }
  std::optional<std::size_t> index(std::size_t node, Phase p) const;
  std::size_t node_count() const { return lookup_.size(); }

  const SparseCMatrix& matrix() const { return y_; }
  CMatrix dense() const { return CMatrix(y_); }
  Complex operator()(std::size_t i, std::size_t k) const {
    return y_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }

  AdmittanceMatrix scaled(double factor) const;

 private:
  WiringMode mode_;
  std::vector<Terminal> terminals_;
  std::vector<std::array<int, 4>> lookup_;
  SparseCMatrix y_;
};

struct AssemblyOptions {
  /// Stamp constant-impedance loads as phase-neutral shunts.
  bool stamp_constant_impedance_loads = true;
};

/// Builds the system admittance matrix of `g` in the requested wiring mode.
AdmittanceMatrix assemble_admittance(const GridModel& g, WiringMode mode, const AssemblyOptions& options = {});

}  // namespace lvse::net
