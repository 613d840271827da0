#include <charconv>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "lvse/error.hpp"
#include "lvse/metering.hpp"
#include "text_util.hpp"

namespace lvse::meter {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::p_inj: return "P_inj";
    case Kind::q_inj: return "Q_inj";
    case Kind::vmag: return "Vmag";
    case Kind::vn_mag_virtual: return "Vn_mag_virtual";
    case Kind::thetan_virtual: return "thetan_virtual";
  }
  return "?";
}

Kind kind_from_string(std::string_view s) {
  for (Kind k : {Kind::p_inj, Kind::q_inj, Kind::vmag, Kind::vn_mag_virtual, Kind::thetan_virtual})
    if (to_string(k) == s) return k;
  throw DomainError("unknown measurement kind '" + std::string(s) + "'");
}

void MeterClassSpec::validate() const {
  if (!(full_scale > 0.0)) throw DomainError("meter full scale must be positive");
  if (!(max_error > 0.0 && max_error < 0.1)) throw DomainError("meter maximum error must lie in (0, 0.1)");
  if (!(coverage_factor > 0.0)) throw DomainError("coverage factor must be positive");
}

double sigma_from_class(const MeterClassSpec& spec) {
  spec.validate();
  return spec.max_error * spec.full_scale / spec.coverage_factor;
}

double MeterClasses::sigma(Kind k) const {
  switch (k) {
    case Kind::p_inj: return sigma_from_class(p);
    case Kind::q_inj: return sigma_from_class(q);
    case Kind::vmag: return sigma_from_class(v);
    default: break;
  }
  throw DomainError("virtual measurements have no meter class");
}

MeterClasses default_meter_classes() { return {}; }

MeasurementSet::MeasurementSet(std::vector<Measurement> records, std::uint64_t seed, std::string scenario)
    : records_(std::move(records)), seed_(seed), scenario_(std::move(scenario)) {
  std::vector<std::tuple<int, std::size_t, int>> keys;
  keys.reserve(records_.size());
  for (const auto& m : records_) {
    if (!(m.sigma > 0.0) || !std::isfinite(m.sigma)) throw DomainError("measurement sigma must be positive");
    if (!std::isfinite(m.value)) throw DomainError("measurement value is not finite");
    keys.emplace_back(static_cast<int>(m.kind), m.node, static_cast<int>(m.phase));
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) throw DomainError("duplicate measurement key");
}

std::optional<std::size_t> MeasurementSet::find(Kind k, std::size_t node, Phase p) const {
  for (std::size_t i = 0; i < records_.size(); ++i)
    if (records_[i].kind == k && records_[i].node == node && records_[i].phase == p) return i;
  return std::nullopt;
}

bool MeasurementSet::has_virtual() const {
  return std::any_of(records_.begin(), records_.end(), [](const Measurement& m) { return is_virtual(m.kind); });
}

std::size_t MeasurementSet::count(Kind k) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [k](const Measurement& m) { return m.kind == k; }));
}

Vector MeasurementSet::covariance_diagonal() const {
  Vector r(static_cast<Eigen::Index>(records_.size()));
  for (std::size_t i = 0; i < records_.size(); ++i) r(static_cast<Eigen::Index>(i)) = records_[i].sigma * records_[i].sigma;
  return r;
}

MeasurementSet MeasurementSet::with_records(std::vector<Measurement> records) const {
  return MeasurementSet(std::move(records), seed_, scenario_);
}

std::string MeasurementSet::to_csv(const net::GridModel& g) const {
  std::ostringstream os;
  os.precision(17);
  os << "# seed=" << seed_ << ", scenario=" << scenario_ << "\n";
  os << "kind,node,phase,value,sigma\n";
  for (const auto& m : records_)
    os << to_string(m.kind) << "," << g.node(m.node).id << "," << to_char(m.phase) << "," << m.value << "," << m.sigma
       << "\n";
  return os.str();
}

MeasurementSet MeasurementSet::from_csv(std::string_view text, const net::GridModel& g) {
  std::vector<Measurement> records;
  std::uint64_t seed = 0;
  std::string scenario;
  std::size_t line_no = 0, pos = 0;
  bool header_seen = false;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (const auto& kv : detail::split(line.substr(1), ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        auto key = detail::trim(std::string_view(kv).substr(0, eq));
        auto val = std::string(detail::trim(std::string_view(kv).substr(eq + 1)));
        if (key == "seed") {
          auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), seed);
          if (ec != std::errc() || ptr != val.data() + val.size())
            throw ParseError("<measurements>", line_no, "bad seed '" + val + "'");
        }
        if (key == "scenario") scenario = val;
      }
      continue;
    }
    detail::Record r{"<measurements>", line_no, detail::split(line, ',')};
    if (!header_seen) {
      header_seen = true;
      if (r.fields.size() == 5 && r.fields[0] == "kind") continue;
    }
    r.expect_fields(5, 5);
    Measurement m;
    try {
      m.kind = kind_from_string(r.fields[0]);
      if (r.fields[2].size() != 1) r.fail("phase must be one letter");
      m.phase = phase_from_char(r.fields[2][0]);
    } catch (const DomainError& e) {
      r.fail(e.what());
    }
    auto node = g.find_node(r.fields[1]);
    if (!node) r.fail("unknown node '" + r.fields[1] + "'");
    m.node = *node;
    m.value = r.number(3);
    m.sigma = r.number(4);
    records.push_back(m);
  }
  return MeasurementSet(std::move(records), seed, std::move(scenario));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t iteration) {
  // splitmix64 finaliser over the combined key.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

MeasurementSet simulate_measurements(const pf::PowerFlowSolution& truth, const net::GridModel& g,
                                     const MeterClasses& classes, std::uint64_t seed, double noise_scale,
                                     std::string scenario) {
  if (!truth.converged) throw ModelError("measurement simulation needs a converged truth");
  if (truth.voltages.size() != g.node_count()) throw ModelError("truth solution does not match the grid");

  // Metered consumption per (node, phase) from the truth loads.
  std::map<std::pair<std::size_t, Phase>, Complex> consumption;
  for (const auto& l : pf::loads_from_grid(g)) {
    Complex s = l.power;
    if (l.admittance) {
      const Complex dv = truth.meter_voltage(l.node, l.phase);
      s = dv * std::conj(*l.admittance * dv);
    }
    consumption[{l.node, l.phase}] += s;
  }

  boost::random::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double sp = classes.sigma(Kind::p_inj);
  const double sq = classes.sigma(Kind::q_inj);
  const double sv = classes.sigma(Kind::vmag);

  std::vector<Measurement> records;
  for (std::size_t node : g.consumer_nodes()) {
    for (Phase p : g.node(node).phases.without_neutral().members()) {
      auto it = consumption.find({node, p});
      const Complex s = it == consumption.end() ? Complex{} : it->second;
      const double vm = std::abs(truth.meter_voltage(node, p));
      if (!(vm > 0.0)) throw ModelError("no truth voltage at consumer '" + g.node(node).id + "'");
      // Draw order per channel is fixed: P, Q, |V|.
      const double np = normal(engine), nq = normal(engine), nv = normal(engine);
      records.push_back({Kind::p_inj, node, p, -s.real() + noise_scale * sp * np, sp});
      records.push_back({Kind::q_inj, node, p, -s.imag() + noise_scale * sq * nq, sq});
      records.push_back({Kind::vmag, node, p, vm + noise_scale * sv * nv, sv});
    }
  }
  return MeasurementSet(std::move(records), seed, std::move(scenario));
}

double voltage_sigma_pu(const MeterClasses& classes, const net::GridModel& g) {
  return classes.sigma(Kind::vmag) / g.require_transformer().model.phase_base_v();
}

MeasurementSet attach_virtual_neutral(const MeasurementSet& ms, const pf::PowerFlowSolution& pf,
                                      const net::GridModel& g, double voltage_sigma_pu, double angle_weight_factor) {
  if (!pf.converged) throw ModelError("virtual neutral measurements need a converged power flow");
  if (ms.has_virtual()) throw DomainError("measurement set already holds virtual neutral rows");
  if (!(voltage_sigma_pu > 0.0) || !(angle_weight_factor > 0.0)) throw DomainError("virtual sigma must be positive");
  const double vbase = g.require_transformer().model.phase_base_v();
  const double sigma_theta = voltage_sigma_pu / std::sqrt(angle_weight_factor);

  auto records = ms.records();
  for (std::size_t u : g.preorder()) {
    if (!g.node(u).phases.has_neutral() || g.neutral_grounded(u)) continue;
    const Complex vn = pf.voltage(u, Phase::n);
    records.push_back({Kind::vn_mag_virtual, u, Phase::n, std::abs(vn) / vbase, voltage_sigma_pu});
    records.push_back({Kind::thetan_virtual, u, Phase::n, std::arg(vn), sigma_theta});
  }
  return ms.with_records(std::move(records));
}

}  // namespace lvse::meter
