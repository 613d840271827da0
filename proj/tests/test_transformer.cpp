#include <cmath>

#include <gtest/gtest.h>

#include "lvse/error.hpp"
#include "lvse/feeder_io.hpp"
#include "lvse/powerflow.hpp"
#include "lvse/transformer.hpp"

using namespace lvse;
using namespace lvse::net;

namespace {

TransformerModel standard() {
  TransformerModel t;
  t.leakage_admittance_pu = TransformerModel::admittance_from_impedance(0.004, 0.04);
  return t;
}

}  // namespace

TEST(Transformer, ZeroRowSums) {
  const auto y = build_transformer_admittance(standard());
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(y.pp.row(i).sum(), Complex(0.0, 0.0));
    EXPECT_EQ(y.ps.row(i).sum(), Complex(0.0, 0.0));
  }
}

TEST(Transformer, BlockIdentities) {
  const auto t = standard();
  const auto y = build_transformer_admittance(t);
  EXPECT_EQ(y.sp, y.ps.transpose());
  const Eigen::Matrix3cd ss = t.leakage_admittance_pu * Eigen::Matrix3cd::Identity();
  EXPECT_EQ(y.ss, ss);
}

TEST(Transformer, PrimaryBlockHandValue) {
  const auto t = standard();
  const auto y = build_transformer_admittance(t);
  const Complex yt = t.leakage_admittance_pu;
  EXPECT_LT(std::abs(y.pp(0, 0) - 2.0 * yt / 3.0), 1e-12);
  EXPECT_LT(std::abs(y.pp(0, 1) + yt / 3.0), 1e-12);
  EXPECT_LT(std::abs(std::abs(y.ps(0, 1)) - std::abs(yt) / std::sqrt(3.0)), 1e-12);
}

TEST(Transformer, LeakageFromImpedance) {
  const Complex y = TransformerModel::admittance_from_impedance(0.004, 0.04);
  EXPECT_LT(std::abs(y - 1.0 / Complex(0.004, 0.04)), 1e-12);
}

TEST(Transformer, PositiveShiftTransposesCoupling) {
  auto lag = standard();
  auto lead = standard();
  lead.phase_shift_deg = 30.0;
  EXPECT_EQ(build_transformer_admittance(lead).ps, build_transformer_admittance(lag).ps.transpose());
}

TEST(Transformer, InvalidParametersRejected) {
  auto t = standard();
  t.phase_shift_deg = 0.0;
  EXPECT_THROW(t.validate(), DomainError);
  t = standard();
  t.rated_va = 0.0;
  EXPECT_THROW(t.validate(), DomainError);
  t = standard();
  t.secondary_grounded = false;
  EXPECT_THROW(t.validate(), DomainError);
  EXPECT_THROW(TransformerModel::admittance_from_impedance(0.0, 0.0), DomainError);
}

TEST(Transformer, SiemensOnLowVoltageBase) {
  const auto t = standard();
  EXPECT_NEAR(t.phase_base_v(), 416.0 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(t.impedance_base_ohm(), 416.0 * 416.0 / 800e3, 1e-15);
  const auto si = to_siemens(build_transformer_admittance(t), t);
  EXPECT_LT(std::abs(si.ss(0, 0) - t.leakage_admittance_pu / t.impedance_base_ohm()), 1e-9);
}

TEST(Transformer, NoLoadSecondaryLagsByThirtyDegrees) {
  const auto base = parse_feeder(two_node_feeder_text());
  auto data = base.data();
  data.loads = {{base.node_index("load"), Phase::a, 1e-3, 0.0}};
  const GridModel g(std::move(data));
  const auto sol = pf::solve_bfs(g);
  const auto lv = g.node_index("lv");
  for (Phase p : kPowerPhases) {
    const double expect = -30.0 - 120.0 * static_cast<double>(index_of(p));
    const double got = std::arg(sol.voltage(lv, p)) * 180.0 / M_PI;
    EXPECT_NEAR(std::remainder(got - expect, 360.0), 0.0, 1e-4);
    EXPECT_NEAR(std::abs(sol.voltage(lv, p)), 416.0 / std::sqrt(3.0), 1e-3);
  }
}
