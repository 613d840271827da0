#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "lvse/error.hpp"
#include "lvse/feeder_io.hpp"
#include "text_util.hpp"

namespace lvse::net {

namespace {

using detail::Record;

const std::vector<std::string_view> kSections{"linetypes", "nodes", "branches", "transformer", "loads", "grounding"};

bool is_builtin(std::string_view name) { return name == "4x100" || name == "2x22"; }

std::vector<LineType> builtin_line_types() { return {{"4x100", line_4x100(), std::nullopt}, {"2x22", line_2x22(), std::nullopt}}; }

NodeKind parse_kind(const Record& r, const std::string& s) {
  if (s == "source") return NodeKind::source;
  if (s == "junction") return NodeKind::junction;
  if (s == "consumer") return NodeKind::consumer;
  r.fail("unknown node kind '" + s + "'");
}

LoadModel parse_load_model(const Record& r, const std::string& s) {
  if (s == "constant_power" || s == "cp") return LoadModel::constant_power;
  if (s == "constant_impedance" || s == "cz") return LoadModel::constant_impedance;
  r.fail("unknown load model '" + s + "'");
}

// Consumes a `[linetypes]` block: header records followed by one row per conductor.
std::vector<LineType> read_line_types(const std::vector<Record>& records, std::vector<LineType> out = {}) {
  std::size_t i = 0;
  while (i < records.size()) {
    const Record& head = records[i++];
    head.expect_fields(3, 3);
    const std::string& name = head.fields[0];
    const std::string& form = head.fields[1];
    const std::string& labels = head.fields[2];
    const std::size_t nc = labels.size();
    if (nc == 0) head.fail("line type '" + name + "' has no conductors");
    for (const auto& lt : out)
      if (lt.name == name) head.fail("duplicate line type '" + name + "'");
    if (i + nc > records.size()) head.fail("line type '" + name + "' needs " + std::to_string(nc) + " rows");
    try {
      if (form == "matrix") {
        Matrix r(nc, nc), x(nc, nc);
        for (std::size_t row = 0; row < nc; ++row) {
          const Record& rec = records[i++];
          rec.expect_fields(2 * nc, 2 * nc);
          for (std::size_t col = 0; col < nc; ++col) {
            r(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = rec.number(2 * col);
            x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = rec.number(2 * col + 1);
          }
        }
        out.push_back({name, LineImpedance::from_resistance_reactance(r, x, labels), std::nullopt});
      } else if (form == "geometry") {
        std::vector<Conductor> conductors;
        for (std::size_t row = 0; row < nc; ++row) {
          const Record& rec = records[i++];
          rec.expect_fields(4, 4);
          conductors.push_back({labels[row], rec.number(0), rec.number(1), rec.number(2), rec.number(3)});
        }
        ConductorGeometry geom(std::move(conductors));
        out.push_back({name, build_line_impedance(geom), geom});
      } else {
        head.fail("line type form must be 'matrix' or 'geometry', got '" + form + "'");
      }
    } catch (const DomainError& e) {
      head.fail("line type '" + name + "': " + e.what());
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

GridModel parse_feeder(std::string_view text, std::string_view source_name) {
  auto sections = detail::split_sections(text, std::string(source_name), kSections);

  GridData data;
  data.line_types = read_line_types(sections["linetypes"], builtin_line_types());

  std::map<std::string, std::size_t> node_ids;
  for (const auto& r : sections["nodes"]) {
    r.expect_fields(3, 3);
    Node node;
    node.id = r.fields[0];
    node.kind = parse_kind(r, r.fields[1]);
    try {
      node.phases = PhaseSet::parse(r.fields[2]);
    } catch (const DomainError& e) {
      r.fail(e.what());
    }
    if (!node_ids.emplace(node.id, data.nodes.size()).second) r.fail("duplicate node id '" + node.id + "'");
    data.nodes.push_back(std::move(node));
  }
  auto node_ref = [&](const Record& r, const std::string& id) {
    auto it = node_ids.find(id);
    if (it == node_ids.end()) r.fail("unknown node '" + id + "'");
    return it->second;
  };

  for (const auto& r : sections["branches"]) {
    r.expect_fields(4, 4);
    Branch br;
    br.from = node_ref(r, r.fields[0]);
    br.to = node_ref(r, r.fields[1]);
    bool found = false;
    for (std::size_t k = 0; k < data.line_types.size(); ++k)
      if (data.line_types[k].name == r.fields[2]) {
        br.line_type = k;
        found = true;
      }
    if (!found) r.fail("unknown line type '" + r.fields[2] + "'");
    br.length_km = r.number(3);
    data.branches.push_back(br);
  }

  const auto& tr = sections["transformer"];
  if (tr.size() > 1) tr[1].fail("only one transformer is supported");
  if (tr.size() == 1) {
    const auto& r = tr[0];
    r.expect_fields(7, 8);
    TransformerConnection t;
    t.primary = node_ref(r, r.fields[0]);
    t.secondary = node_ref(r, r.fields[1]);
    t.model.rated_va = r.number(2);
    t.model.primary_ll_v = r.number(3);
    t.model.secondary_ll_v = r.number(4);
    try {
      t.model.leakage_admittance_pu = TransformerModel::admittance_from_impedance(r.number(5), r.number(6));
    } catch (const DomainError& e) {
      r.fail(e.what());
    }
    if (r.fields.size() == 8) t.model.phase_shift_deg = r.number(7);
    data.transformer = t;
  }

  for (const auto& r : sections["loads"]) {
    r.expect_fields(4, 5);
    const std::size_t node = node_ref(r, r.fields[0]);
    PhaseSet phases;
    try {
      phases = PhaseSet::parse(r.fields[1]);
    } catch (const DomainError& e) {
      r.fail(e.what());
    }
    if (phases.empty() || phases.has_neutral()) r.fail("load phases must be a non-empty subset of abc");
    const LoadModel model = r.fields.size() == 5 ? parse_load_model(r, r.fields[4]) : LoadModel::constant_power;
    const double share = 1.0 / static_cast<double>(phases.size());
    for (Phase p : phases.members()) data.loads.push_back({node, p, r.number(2) * share, r.number(3) * share, model});
  }

  for (const auto& r : sections["grounding"]) {
    r.expect_fields(1, 1);
    data.grounded.push_back(node_ref(r, r.fields[0]));
  }

  return GridModel(std::move(data));
}

GridModel load_feeder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feeder file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_feeder(buf.str(), path.string());
}

std::vector<LineType> parse_line_types(std::string_view text, std::string_view source_name) {
  auto sections = detail::split_sections(text, std::string(source_name), kSections);
  return read_line_types(sections["linetypes"]);
}

std::string write_feeder(const GridModel& g) {
  std::ostringstream os;
  os << "[linetypes]\n";
  for (const auto& lt : g.line_types()) {
    if (is_builtin(lt.name)) continue;
    const auto& z = lt.impedance;
    if (lt.geometry) {
      os << lt.name << ",geometry," << z.labels() << "\n";
      for (const auto& c : lt.geometry->conductors())
        os << fmt(c.r_ohm_per_km) << "," << fmt(c.gmr_m) << "," << fmt(c.x_m) << "," << fmt(c.y_m) << "\n";
    } else {
      os << lt.name << ",matrix," << z.labels() << "\n";
      for (std::size_t i = 0; i < z.conductor_count(); ++i) {
        for (std::size_t j = 0; j < z.conductor_count(); ++j)
          os << (j ? "," : "") << fmt(z(i, j).real()) << "," << fmt(z(i, j).imag());
        os << "\n";
      }
    }
  }
  os << "\n[nodes]\n";
  for (const auto& n : g.nodes()) os << n.id << "," << to_string(n.kind) << "," << n.phases.str() << "\n";
  os << "\n[branches]\n";
  for (const auto& b : g.branches())
    os << g.node(b.from).id << "," << g.node(b.to).id << "," << g.line_types()[b.line_type].name << "," << fmt(b.length_km)
       << "\n";
  if (const auto& t = g.transformer()) {
    const Complex z = 1.0 / t->model.leakage_admittance_pu;
    os << "\n[transformer]\n"
       << g.node(t->primary).id << "," << g.node(t->secondary).id << "," << fmt(t->model.rated_va) << ","
       << fmt(t->model.primary_ll_v) << "," << fmt(t->model.secondary_ll_v) << "," << fmt(z.real()) << ","
       << fmt(z.imag()) << "," << fmt(t->model.phase_shift_deg) << "\n";
  }
  os << "\n[loads]\n";
  for (const auto& l : g.loads())
    os << g.node(l.node).id << "," << to_char(l.phase) << "," << fmt(l.p_w) << "," << fmt(l.q_var) << ","
       << to_string(l.model) << "\n";
  os << "\n[grounding]\n";
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (g.neutral_grounded(i)) os << g.node(i).id << "\n";
  return os.str();
}

}  // namespace lvse::net
