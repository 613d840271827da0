#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "lvse/error.hpp"
#include "lvse/feeder_io.hpp"
#include "lvse/metering.hpp"
#include "support.hpp"

using namespace lvse;
using namespace lvse::meter;

TEST(MeterClass, SigmaFromAccuracyClass) {
  const auto c = default_meter_classes();
  EXPECT_NEAR(c.sigma(Kind::p_inj), 28.163, 1e-3);
  EXPECT_NEAR(c.sigma(Kind::q_inj), 46.939, 1e-3);
  EXPECT_NEAR(c.sigma(Kind::vmag), 0.6122, 1e-4);
  EXPECT_THROW(c.sigma(Kind::thetan_virtual), DomainError);
  EXPECT_THROW(sigma_from_class({Kind::p_inj, 0.0, 0.01}), DomainError);
  EXPECT_THROW(sigma_from_class({Kind::p_inj, 100.0, 0.2}), DomainError);
}

TEST(MeterClass, VirtualAngleSigma) {
  const auto g = net::synthetic_feeder();
  const double sv = voltage_sigma_pu(default_meter_classes(), g);
  EXPECT_NEAR(sv, 0.6122 / 240.177, 1e-6);
  EXPECT_NEAR(sv / std::sqrt(10.0), 8.063e-4, 1e-6);
}

TEST(DeriveSeed, DistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
  EXPECT_NE(derive_seed(42, 7), derive_seed(43, 7));
}

TEST(Simulate, NoiselessReadingsEqualTruth) {
  const auto g = fixture::scenario(0.5, 1.0);
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto ms = simulate_measurements(truth, g, default_meter_classes(), 5, 0.0);
  EXPECT_EQ(ms.size(), 3u * (10 + 2 * 3));
  EXPECT_EQ(ms.seed(), 5u);
  for (const auto& l : g.loads()) {
    const auto p = ms.find(Kind::p_inj, l.node, l.phase);
    ASSERT_TRUE(p);
    EXPECT_NEAR(ms.records()[*p].value, -l.p_w, 1e-9);
    const auto v = ms.find(Kind::vmag, l.node, l.phase);
    ASSERT_TRUE(v);
    EXPECT_NEAR(ms.records()[*v].value, std::abs(truth.meter_voltage(l.node, l.phase)), 1e-9);
  }
}

TEST(Simulate, SameSeedSameReadings) {
  const auto g = fixture::scenario(0.5, 1.0);
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto a = simulate_measurements(truth, g, default_meter_classes(), 9);
  const auto b = simulate_measurements(truth, g, default_meter_classes(), 9);
  const auto c = simulate_measurements(truth, g, default_meter_classes(), 10);
  EXPECT_EQ(a.to_csv(g), b.to_csv(g));
  EXPECT_NE(a.to_csv(g), c.to_csv(g));
}

TEST(Simulate, ConstantImpedanceReadingsFollowVoltage) {
  const auto g = net::with_load_model(fixture::scenario(1.0, 5.0), net::LoadModel::constant_impedance);
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto ms = simulate_measurements(truth, g, default_meter_classes(), 1, 0.0);
  const auto& l = g.loads().front();
  const double v = std::abs(truth.meter_voltage(l.node, l.phase));
  const double vb = fixture::vbase(g);
  EXPECT_NEAR(ms.records()[*ms.find(Kind::p_inj, l.node, l.phase)].value, -l.p_w * v * v / (vb * vb), 1e-6);
}

TEST(MeasurementSet, CsvRoundTrip) {
  const auto g = fixture::scenario(0.5, 1.0);
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto ms = attach_virtual_neutral(simulate_measurements(truth, g, default_meter_classes(), 3), truth, g, 0.0025);
  const auto back = MeasurementSet::from_csv(ms.to_csv(g), g);
  EXPECT_EQ(back.to_csv(g), ms.to_csv(g));
  EXPECT_EQ(back.seed(), 3u);
}

TEST(MeasurementSet, RejectsBadRecords) {
  EXPECT_THROW(MeasurementSet({{Kind::p_inj, 1, Phase::a, 1.0, 0.0}}), DomainError);
  EXPECT_THROW(MeasurementSet({{Kind::p_inj, 1, Phase::a, 1.0, 1.0}, {Kind::p_inj, 1, Phase::a, 2.0, 1.0}}),
               DomainError);
  const auto g = net::synthetic_feeder();
  EXPECT_THROW(MeasurementSet::from_csv("kind,node,phase,value,sigma\nP_inj,nowhere,a,1,1\n", g), ParseError);
  EXPECT_THROW(MeasurementSet::from_csv("P_inj,h01,a,1\n", g), ParseError);
  EXPECT_THROW(MeasurementSet::from_csv("Watts,h01,a,1,1\n", g), ParseError);
}

TEST(VirtualNeutral, OneMagnitudeAndAnglePerFloatingNeutral) {
  const auto g = fixture::scenario(0.5, 1.0);
  const auto truth = fixture::truth(g, WiringMode::fourwire);
  const auto ms = simulate_measurements(truth, g, default_meter_classes(), 3);
  const auto aug = attach_virtual_neutral(ms, truth, g, 0.0025);
  EXPECT_EQ(aug.count(Kind::vn_mag_virtual), 18u);
  EXPECT_EQ(aug.count(Kind::thetan_virtual), 18u);
  const auto h01 = g.node_index("h01");
  const auto& rec = aug.records()[*aug.find(Kind::thetan_virtual, h01, Phase::n)];
  EXPECT_NEAR(rec.sigma, 0.0025 / std::sqrt(10.0), 1e-15);
  EXPECT_NEAR(rec.value, std::arg(truth.voltage(h01, Phase::n)), 1e-15);
  EXPECT_THROW(attach_virtual_neutral(aug, truth, g, 0.0025), DomainError);
  const auto grounded = net::with_neutral_grounded_everywhere(g);
  EXPECT_FALSE(attach_virtual_neutral(ms, truth, grounded, 0.0025).has_virtual());
}
