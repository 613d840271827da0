#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvse/grid.hpp"
#include "lvse/powerflow.hpp"

namespace lvse::meter {

/// Kinds of measurement rows. Meter rows are in physical units (W, var, V);
/// virtual neutral rows are in per unit (magnitude) and radians (angle).
enum class Kind { p_inj, q_inj, vmag, vn_mag_virtual, thetan_virtual };

std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view s);
inline bool is_virtual(Kind k) { return k == Kind::vn_mag_virtual || k == Kind::thetan_virtual; }

/// Accuracy class of one meter channel: the maximum error `max_error` (fraction
/// of `full_scale`) holds with the confidence given by `coverage_factor`.
struct MeterClassSpec {
  Kind kind = Kind::p_inj;
  double full_scale = 0.0;
  double max_error = 0.0;
  double coverage_factor = 1.96;

  void validate() const;
};

/// Standard deviation of a meter channel, in the channel's physical unit.
double sigma_from_class(const MeterClassSpec& spec);

struct MeterClasses {
  MeterClassSpec p{Kind::p_inj, 9200.0, 0.006};
  MeterClassSpec q{Kind::q_inj, 9200.0, 0.01};
  MeterClassSpec v{Kind::vmag, 300.0, 0.004};

  double sigma(Kind k) const;
};

/// Smart-meter accuracy classes 0.5s (P) and 1 (Q) with a 0.4 % voltage channel.
MeterClasses default_meter_classes();

struct Measurement {
  Kind kind = Kind::p_inj;
  std::size_t node = 0;
  Phase phase = Phase::a;
  double value = 0.0;
  double sigma = 1.0;
};

/// Ordered measurement records with diagonal covariance R = diag(sigma^2).
/// Keys (kind, node, phase) are unique and every sigma is positive.
class MeasurementSet {
 public:
  MeasurementSet() = default;
  explicit MeasurementSet(std::vector<Measurement> records, std::uint64_t seed = 0, std::string scenario = {});

  const std::vector<Measurement>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::string& scenario() const { return scenario_; }

  std::optional<std::size_t> find(Kind k, std::size_t node, Phase p) const;
  bool has_virtual() const;
  std::size_t count(Kind k) const;

  /// Diagonal of R.
  Vector covariance_diagonal() const;

  MeasurementSet with_records(std::vector<Measurement> records) const;

  /// CSV rows `kind,node,phase,value,sigma` after a `# seed=..., scenario=...` comment.
  std::string to_csv(const net::GridModel& g) const;
  static MeasurementSet from_csv(std::string_view text, const net::GridModel& g);

 private:
  std::vector<Measurement> records_;
  std::uint64_t seed_ = 0;
  std::string scenario_;
};

/// Derives an independent stream seed for Monte Carlo iteration `iteration`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t iteration);

/// Noisy meter readings at every consumer: P, Q injection and phase-to-neutral
/// |V| per connected phase. Noise is N(0, sigma^2) in physical units.
/// `noise_scale` multiplies every sigma's draw (0 yields exact readings; the
/// recorded sigma is unchanged).
MeasurementSet simulate_measurements(const pf::PowerFlowSolution& truth, const net::GridModel& g,
                                     const MeterClasses& classes, std::uint64_t seed, double noise_scale = 1.0,
                                     std::string scenario = {});

/// Appends virtual neutral magnitude (pu) and angle (rad) rows for every node
/// whose neutral is not grounded, taken unperturbed from `pf`. The angle row
/// weighs `angle_weight_factor` times the magnitude row.
MeasurementSet attach_virtual_neutral(const MeasurementSet& ms, const pf::PowerFlowSolution& pf,
                                      const net::GridModel& g, double voltage_sigma_pu,
                                      double angle_weight_factor = 10.0);

/// Meter voltage sigma on the LV phase base.
double voltage_sigma_pu(const MeterClasses& classes, const net::GridModel& g);

}  // namespace lvse::meter
