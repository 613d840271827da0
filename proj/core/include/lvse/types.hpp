#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lvse {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSystemFrequencyHz = 50.0;
inline constexpr double kOmega = 2.0 * std::numbers::pi * kSystemFrequencyHz;

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2, n = 3 };

inline constexpr std::array<Phase, 4> kAllPhases{Phase::a, Phase::b, Phase::c, Phase::n};
inline constexpr std::array<Phase, 3> kPowerPhases{Phase::a, Phase::b, Phase::c};

constexpr std::size_t index_of(Phase p) { return static_cast<std::size_t>(p); }
constexpr bool is_neutral(Phase p) { return p == Phase::n; }

char to_char(Phase p);
Phase phase_from_char(char c);

/// Bit set over {a, b, c, n}.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;

  static PhaseSet parse(std::string_view letters);
  static constexpr PhaseSet abc() { return PhaseSet{0b0111}; }
  static constexpr PhaseSet abcn() { return PhaseSet{0b1111}; }

  constexpr bool contains(Phase p) const { return (bits_ >> index_of(p)) & 1u; }
  constexpr void insert(Phase p) { bits_ |= static_cast<std::uint8_t>(1u << index_of(p)); }
  constexpr void erase(Phase p) { bits_ &= static_cast<std::uint8_t>(~(1u << index_of(p))); }
  constexpr bool has_neutral() const { return contains(Phase::n); }
  constexpr bool empty() const { return bits_ == 0; }

  std::size_t size() const;
  std::size_t power_phase_count() const;
  PhaseSet without_neutral() const {
    PhaseSet s = *this;
    s.erase(Phase::n);
    return s;
  }
  bool is_subset_of(PhaseSet other) const { return (bits_ & ~other.bits_) == 0; }

  /// Members in canonical a, b, c, n order.
  std::vector<Phase> members() const;
  std::string str() const;

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits) {}
  std::uint8_t bits_ = 0;
};

/// Three-wire (neutral Kron-reduced) or four-wire (explicit neutral) network representation.
enum class WiringMode { threewire, fourwire };

std::string_view to_string(WiringMode m);

inline Complex polar_deg(double magnitude, double angle_deg) {
  return std::polar(magnitude, angle_deg * std::numbers::pi / 180.0);
}

}  // namespace lvse
