#pragma once

#include <cmath>
#include <random>

#include "lvse/feeder_io.hpp"
#include "lvse/grid.hpp"
#include "lvse/powerflow.hpp"

namespace lvse::fixture {

inline net::GridModel scenario(double loading, double scale, double pf = 0.95) {
  return net::apply_scenario(net::synthetic_feeder(), loading, pf, scale);
}

inline pf::PowerFlowSolution truth(const net::GridModel& g, WiringMode mode, double tol = 1e-13) {
  pf::PowerFlowOptions o;
  o.mode = mode;
  o.tolerance_pu = tol;
  o.max_iterations = 500;
  return pf::solve_bfs(g, o);
}

inline double vbase(const net::GridModel& g) { return g.require_transformer().model.phase_base_v(); }

/// Same topology with every load redrawn: P uniform in [lo, hi] W, power factor in [0.9, 1].
inline net::GridModel random_loads(const net::GridModel& g, std::mt19937_64& rng, double lo = 1000.0,
                                   double hi = 30000.0) {
  std::uniform_real_distribution<double> p(lo, hi), pf(0.9, 1.0);
  auto data = g.data();
  for (auto& l : data.loads) {
    l.p_w = p(rng);
    l.q_var = l.p_w * std::tan(std::acos(pf(rng)));
  }
  return net::GridModel(std::move(data));
}

}  // namespace lvse::fixture
