#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "lvse/error.hpp"
#include "lvse/grid.hpp"

namespace lvse::net {

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::source: return "source";
    case NodeKind::junction: return "junction";
    case NodeKind::consumer: return "consumer";
  }
  return "?";
}

std::string_view to_string(LoadModel m) {
  return m == LoadModel::constant_power ? "constant_power" : "constant_impedance";
}

GridModel::GridModel(GridData data) : data_(std::move(data)) { validate_and_index(); }

const TransformerConnection& GridModel::require_transformer() const {
  if (!data_.transformer) throw ModelError("feeder has no transformer");
  return *data_.transformer;
}

std::optional<std::size_t> GridModel::find_node(std::string_view id) const {
  for (std::size_t i = 0; i < data_.nodes.size(); ++i)
    if (data_.nodes[i].id == id) return i;
  return std::nullopt;
}

std::size_t GridModel::node_index(std::string_view id) const {
  if (auto i = find_node(id)) return *i;
  throw ModelError("unknown node '" + std::string(id) + "'");
}

std::optional<std::size_t> GridModel::find_line_type(std::string_view name) const {
  for (std::size_t i = 0; i < data_.line_types.size(); ++i)
    if (data_.line_types[i].name == name) return i;
  return std::nullopt;
}

namespace {

std::vector<Phase> map_conductors(const std::string& labels, PhaseSet child, const std::string& where) {
  std::vector<Phase> out(labels.size());
  PhaseSet used;
  // Explicit labels first so generic 'p' conductors take the remaining phases.
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 'p') continue;
    Phase p = phase_from_char(labels[i]);
    if (!child.contains(p)) throw ModelError(where + ": conductor '" + labels[i] + "' absent at the to-node");
    out[i] = p;
    used.insert(p);
  }
  auto free = child.without_neutral().members();
  std::size_t next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 'p') continue;
    while (next < free.size() && used.contains(free[next])) ++next;
    if (next == free.size()) throw ModelError(where + ": more phase conductors than to-node phases");
    out[i] = free[next];
    used.insert(free[next++]);
  }
  if (used != child)
    throw ModelError(where + ": line conductors '" + labels + "' do not cover to-node phases '" + child.str() + "'");
  return out;
}

}  // namespace

void GridModel::validate_and_index() {
  const std::size_t n = data_.nodes.size();
  if (n == 0) throw ModelError("feeder has no nodes");

  std::set<std::string> ids;
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = data_.nodes[i];
    if (node.id.empty()) throw ModelError("node with empty id");
    if (!ids.insert(node.id).second) throw ModelError("duplicate node id '" + node.id + "'");
    if (node.phases.power_phase_count() == 0) throw ModelError("node '" + node.id + "' has no phase conductor");
    if (node.kind == NodeKind::source) {
      sources.push_back(i);
      if (node.phases != PhaseSet::abc()) throw ModelError("source node '" + node.id + "' must have phases abc");
    }
    if (node.kind == NodeKind::consumer && !node.phases.has_neutral())
      throw ModelError("consumer node '" + node.id + "' has no neutral");
  }

  if (data_.transformer) {
    const auto& t = *data_.transformer;
    t.model.validate();
    if (sources.size() != 1) throw ModelError("a feeder needs exactly one source node");
    if (t.primary >= n || t.secondary >= n) throw ModelError("transformer references an unknown node");
    if (t.primary != sources.front()) throw ModelError("transformer primary must be the source node");
    const auto& sec = data_.nodes[t.secondary];
    if (sec.kind == NodeKind::source || !PhaseSet::abc().is_subset_of(sec.phases))
      throw ModelError("transformer secondary '" + sec.id + "' must be a three-phase LV node");
    source_ = t.primary;
    root_ = t.secondary;
  } else {
    if (!sources.empty()) throw ModelError("a source node requires a transformer");
    root_ = data_.grounded.empty() ? 0 : data_.grounded.front();
  }
  if (root_ >= n) throw ModelError("grounding references an unknown node");

  // Radial topology of the LV side.
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t b = 0; b < data_.branches.size(); ++b) {
    auto& br = data_.branches[b];
    if (br.from >= n || br.to >= n) throw ModelError("branch " + std::to_string(b) + " references an unknown node");
    if (br.from == br.to) throw ModelError("branch " + std::to_string(b) + " is a self loop");
    if (data_.nodes[br.from].kind == NodeKind::source || data_.nodes[br.to].kind == NodeKind::source)
      throw ModelError("branch " + std::to_string(b) + " touches the MV source; only the transformer may");
    if (br.line_type >= data_.line_types.size())
      throw ModelError("branch " + std::to_string(b) + " references an unknown line type");
    if (!(br.length_km > 0.0) || !std::isfinite(br.length_km))
      throw ModelError("branch " + std::to_string(b) + " has a non-positive length");
    incident[br.from].push_back(b);
    incident[br.to].push_back(b);
  }

  parent_branch_.assign(n, std::nullopt);
  child_branches_.assign(n, {});
  preorder_.clear();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{root_};
  seen[root_] = true;
  std::vector<bool> used(data_.branches.size(), false);
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    preorder_.push_back(u);
    std::vector<std::size_t> kids;
    for (std::size_t b : incident[u]) {
      if (used[b]) continue;
      used[b] = true;
      auto& br = data_.branches[b];
      if (br.to == u) std::swap(br.from, br.to);
      if (seen[br.to])
        throw ModelError("LV network is not radial: branch " + data_.nodes[br.from].id + "-" +
                         data_.nodes[br.to].id + " closes a loop");
      seen[br.to] = true;
      parent_branch_[br.to] = b;
      child_branches_[u].push_back(b);
      kids.push_back(br.to);
    }
    // Reverse push keeps children in file order in the pre-order walk.
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i] && data_.nodes[i].kind != NodeKind::source)
      throw ModelError("node '" + data_.nodes[i].id + "' is not connected to the LV root");

  branch_phases_.assign(data_.branches.size(), {});
  for (std::size_t b = 0; b < data_.branches.size(); ++b) {
    const auto& br = data_.branches[b];
    const auto& from = data_.nodes[br.from];
    const auto& to = data_.nodes[br.to];
    const std::string where = "branch " + from.id + "-" + to.id;
    if (!to.phases.is_subset_of(from.phases))
      throw ModelError(where + ": to-node phases '" + to.phases.str() + "' not available at from-node");
    const auto& lt = data_.line_types[br.line_type];
    branch_phases_[b] = map_conductors(lt.impedance.labels(), to.phases, where + " (" + lt.name + ")");
  }

  grounded_.assign(n, false);
  for (std::size_t g : data_.grounded) {
    if (g >= n) throw ModelError("grounding references an unknown node");
    if (!data_.nodes[g].phases.has_neutral()) throw ModelError("grounded node '" + data_.nodes[g].id + "' has no neutral");
    grounded_[g] = true;
  }
  bool any_neutral = std::any_of(data_.nodes.begin(), data_.nodes.end(), [](const Node& x) { return x.phases.has_neutral(); });
  if (any_neutral && data_.nodes[root_].phases.has_neutral() && !grounded_[root_])
    throw ModelError("the neutral must be grounded at the LV root '" + data_.nodes[root_].id + "'");
  std::size_t neutral_nodes = 0, grounded_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data_.nodes[i].phases.has_neutral()) ++neutral_nodes;
    if (grounded_[i]) ++grounded_count;
  }
  grounded_everywhere_ = neutral_nodes > 0 && grounded_count == neutral_nodes;
  if (grounded_count > 1 && !grounded_everywhere_)
    throw ModelError("neutral grounding must be at the LV root only or at every node");

  for (const auto& load : data_.loads) {
    if (load.node >= n) throw ModelError("load references an unknown node");
    const auto& node = data_.nodes[load.node];
    if (node.kind != NodeKind::consumer) throw ModelError("load at non-consumer node '" + node.id + "'");
    if (is_neutral(load.phase) || !node.phases.contains(load.phase))
      throw ModelError("load at '" + node.id + "' references absent phase " + std::string(1, to_char(load.phase)));
    if (!std::isfinite(load.p_w) || !std::isfinite(load.q_var)) throw ModelError("load at '" + node.id + "' is not finite");
  }
}

CMatrix GridModel::branch_impedance(std::size_t branch, WiringMode mode) const {
  const auto& br = data_.branches[branch];
  const auto& line = data_.line_types[br.line_type].impedance;
  if (mode == WiringMode::threewire && line.has_neutral()) return kron_reduce(line).z() * br.length_km;
  return line.z() * br.length_km;
}

bool GridModel::has_load(std::size_t node) const {
  return std::any_of(data_.loads.begin(), data_.loads.end(), [node](const Load& l) { return l.node == node; });
}

std::vector<std::size_t> GridModel::zero_injection_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i : preorder_)
    if (data_.nodes[i].kind != NodeKind::consumer && !has_load(i)) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> GridModel::consumer_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data_.nodes.size(); ++i)
    if (data_.nodes[i].kind == NodeKind::consumer) out.push_back(i);
  return out;
}

double GridModel::total_load_va() const {
  double s = 0.0;
  for (const auto& l : data_.loads) s += std::abs(l.power());
  return s;
}

GridModel apply_scenario(const GridModel& g, double loading_fraction, double pf, double length_scale) {
  if (!(loading_fraction > 0.0 && loading_fraction <= 1.25)) throw DomainError("loading fraction must lie in (0, 1.25]");
  if (!(pf > 0.0 && pf <= 1.0)) throw DomainError("power factor must lie in (0, 1]");
  if (!(length_scale > 0.0)) throw DomainError("length scale must be positive");
  const auto& t = g.require_transformer();

  GridData data = g.data();
  if (data.loads.empty()) throw ModelError("scenario needs at least one consumer load");
  const double baseline = g.total_load_va();
  if (!(baseline > 0.0)) throw ModelError("scenario needs nonzero baseline loads to share");

  const double total = loading_fraction * t.model.rated_va;
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - pf * pf));
  for (auto& load : data.loads) {
    const double s = total * std::abs(load.power()) / baseline;
    load.p_w = s * pf;
    load.q_var = s * sin_phi;
  }
  for (auto& br : data.branches) br.length_km *= length_scale;
  return GridModel(std::move(data));
}

GridModel with_neutral_grounded_everywhere(const GridModel& g) {
  GridData data = g.data();
  data.grounded.clear();
  data.grounded.push_back(g.root());
  for (std::size_t i = 0; i < data.nodes.size(); ++i)
    if (i != g.root() && data.nodes[i].phases.has_neutral()) data.grounded.push_back(i);
  return GridModel(std::move(data));
}

GridModel with_load_model(const GridModel& g, LoadModel model) {
  GridData data = g.data();
  for (auto& l : data.loads) l.model = model;
  return GridModel(std::move(data));
}

}  // namespace lvse::net
