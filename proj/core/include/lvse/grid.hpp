#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvse/line_impedance.hpp"
#include "lvse/transformer.hpp"
#include "lvse/types.hpp"

namespace lvse::net {

enum class NodeKind { source, junction, consumer };
enum class LoadModel { constant_power, constant_impedance };

std::string_view to_string(NodeKind k);
std::string_view to_string(LoadModel m);

struct Node {
  std::string id;
  PhaseSet phases;
  NodeKind kind = NodeKind::junction;
};

struct LineType {
  std::string name;
  LineImpedance impedance;
  std::optional<ConductorGeometry> geometry;
};

struct Branch {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t line_type = 0;
  double length_km = 0.0;
};

struct TransformerConnection {
  TransformerModel model;
  std::size_t primary = 0;
  std::size_t secondary = 0;
};

/// Phase-to-neutral load. Constant-impedance loads carry their rated power at
/// the nominal phase voltage.
struct Load {
  std::size_t node = 0;
  Phase phase = Phase::a;
  double p_w = 0.0;
  double q_var = 0.0;
  LoadModel model = LoadModel::constant_power;

  Complex power() const { return {p_w, q_var}; }
};

/// Plain description of a feeder; `GridModel` validates it.
struct GridData {
  std::vector<Node> nodes;
  std::vector<LineType> line_types;
  std::vector<Branch> branches;
  std::optional<TransformerConnection> transformer;
  std::vector<Load> loads;
  std::vector<std::size_t> grounded;
};

/// Validated, immutable feeder model with its radial topology.
///
/// The LV side is a tree rooted at the transformer secondary (or, for
/// transformer-less fragments, at the first grounded node). Neutral grounding
/// is either at the root only or at every node carrying a neutral; the latter
/// pins all neutral potentials to zero and reproduces the three-wire model.
class GridModel {
 public:
  explicit GridModel(GridData data);

  const GridData& data() const { return data_; }
  const std::vector<Node>& nodes() const { return data_.nodes; }
  const std::vector<Branch>& branches() const { return data_.branches; }
  const std::vector<LineType>& line_types() const { return data_.line_types; }
  const std::vector<Load>& loads() const { return data_.loads; }
  const std::optional<TransformerConnection>& transformer() const { return data_.transformer; }
  const TransformerConnection& require_transformer() const;

  std::size_t node_count() const { return data_.nodes.size(); }
  const Node& node(std::size_t i) const { return data_.nodes[i]; }
  std::optional<std::size_t> find_node(std::string_view id) const;
  std::size_t node_index(std::string_view id) const;
  std::optional<std::size_t> find_line_type(std::string_view name) const;

  std::size_t root() const { return root_; }
  std::optional<std::size_t> source() const { return source_; }

  /// LV nodes in depth-first pre-order from the root.
  const std::vector<std::size_t>& preorder() const { return preorder_; }
  std::optional<std::size_t> parent_branch(std::size_t node) const { return parent_branch_[node]; }
  const std::vector<std::size_t>& child_branches(std::size_t node) const { return child_branches_[node]; }

  bool neutral_grounded(std::size_t node) const { return grounded_[node]; }
  bool grounded_everywhere() const { return grounded_everywhere_; }

  /// Conductors of a branch in row order of its impedance matrix, as phases of the to-node.
  const std::vector<Phase>& branch_conductors(std::size_t branch) const { return branch_phases_[branch]; }

  /// Branch series impedance (Ohm) over `branch_conductors`, optionally Kron-reduced.
  CMatrix branch_impedance(std::size_t branch, WiringMode mode) const;

  /// Nodes that carry neither load nor meter, i.e. zero-injection nodes on the LV side.
  std::vector<std::size_t> zero_injection_nodes() const;
  std::vector<std::size_t> consumer_nodes() const;
  bool has_load(std::size_t node) const;

  double total_load_va() const;

 private:
  void validate_and_index();

  GridData data_;
  std::size_t root_ = 0;
  std::optional<std::size_t> source_;
  std::vector<std::size_t> preorder_;
  std::vector<std::optional<std::size_t>> parent_branch_;
  std::vector<std::vector<std::size_t>> child_branches_;
  std::vector<bool> grounded_;
  bool grounded_everywhere_ = false;
  std::vector<std::vector<Phase>> branch_phases_;
};

/// Rescales loads to `loading_fraction` of the transformer rating at power factor
/// `pf` (lagging), keeping each load's share of baseline apparent power, and
/// multiplies every branch length by `length_scale`.
GridModel apply_scenario(const GridModel& g, double loading_fraction, double pf, double length_scale);

/// Copy of `g` with the neutral grounded at every node that has one.
GridModel with_neutral_grounded_everywhere(const GridModel& g);

/// Copy of `g` whose loads are all switched to `model`.
GridModel with_load_model(const GridModel& g, LoadModel model);

}  // namespace lvse::net
