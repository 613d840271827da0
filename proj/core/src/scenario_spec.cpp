#include <filesystem>
#include <fstream>
#include <sstream>

#include "lvse/bench.hpp"
#include "lvse/error.hpp"
#include "text_util.hpp"

namespace lvse::bench {

std::string_view mode_name(WiringMode m) { return m == WiringMode::fourwire ? "N" : "C"; }

WiringMode mode_from_name(std::string_view s) {
  if (s == "C" || s == "c" || s == "threewire") return WiringMode::threewire;
  if (s == "N" || s == "n" || s == "fourwire") return WiringMode::fourwire;
  throw DomainError("unknown estimator mode '" + std::string(s) + "'");
}

void ScenarioSpec::validate() const {
  if (loadings.empty() || scales.empty()) throw DomainError("sweep needs loadings and scales");
  if (modes.empty()) throw DomainError("sweep needs at least one mode");
  if (monte_carlo < 1) throw DomainError("mc must be at least 1");
  for (double l : loadings)
    if (!(l > 0.0 && l <= 1.25)) throw DomainError("loading fraction outside (0, 1.25]");
  for (double s : scales)
    if (!(s > 0.0)) throw DomainError("length scale must be positive");
  if (!(power_factor > 0.0 && power_factor <= 1.0)) throw DomainError("power factor outside (0, 1]");
}

ScenarioSpec parse_scenario_spec(std::string_view text, const std::string& file) {
  const auto sections = detail::split_sections(text, file, {"sweep"});
  ScenarioSpec spec;
  for (const auto& rec : sections.at("sweep")) {
    const auto eq = rec.fields[0].find('=');
    if (eq == std::string::npos) rec.fail("expected key=value");
    const std::string key(detail::trim(std::string_view(rec.fields[0]).substr(0, eq)));
    detail::Record vals{rec.file, rec.line, rec.fields};
    vals.fields[0] = std::string(detail::trim(std::string_view(rec.fields[0]).substr(eq + 1)));
    auto numbers = [&] {
      std::vector<double> out;
      for (std::size_t i = 0; i < vals.fields.size(); ++i) out.push_back(vals.number(i));
      return out;
    };
    auto single = [&] {
      vals.expect_fields(1, 1);
      return vals.fields[0];
    };
    try {
      if (key == "loadings") {
        spec.loadings = numbers();
      } else if (key == "scales") {
        spec.scales = numbers();
      } else if (key == "mc") {
        single();
        const double v = vals.number(0);
        if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) rec.fail("mc must be a positive integer");
        spec.monte_carlo = static_cast<std::size_t>(v);
      } else if (key == "seed") {
        spec.seed = std::stoull(single());
      } else if (key == "pf") {
        single();
        spec.power_factor = vals.number(0);
      } else if (key == "modes") {
        spec.modes.clear();
        for (const auto& m : vals.fields) spec.modes.push_back(mode_from_name(m));
      } else if (key == "load_model") {
        const auto m = single();
        if (m == "cp" || m == "constant_power") spec.load_model = net::LoadModel::constant_power;
        else if (m == "cz" || m == "constant_impedance") spec.load_model = net::LoadModel::constant_impedance;
        else rec.fail("unknown load model '" + m + "'");
      } else if (key == "feeder") {
        spec.feeder = single();
      } else {
        rec.fail("unknown sweep key '" + key + "'");
      }
    } catch (const DomainError& e) {
      rec.fail(e.what());
    } catch (const std::logic_error&) {
      rec.fail("malformed value for '" + key + "'");
    }
  }
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ParseError(file, 0, e.what());
  }
  return spec;
}

ScenarioSpec load_scenario_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto spec = parse_scenario_spec(ss.str(), path);
  // Relative feeder paths are taken from the spec's directory.
  if (!spec.feeder.empty() && std::filesystem::path(spec.feeder).is_relative())
    spec.feeder = (std::filesystem::path(path).parent_path() / spec.feeder).string();
  return spec;
}

}  // namespace lvse::bench
