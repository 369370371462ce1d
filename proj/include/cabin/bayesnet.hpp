#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cabin/discretizer.hpp"

namespace cabin {

enum class NodeRole { qos_metric, context };

struct NodeSpec {
  std::string name;
  int cardinality = 1;
  NodeRole role = NodeRole::context;
  bool tunable = false;

  bool operator==(const NodeSpec&) const = default;
};

/// Complete discrete data, stored column-major.
struct TraceDataset {
  std::vector<std::string> names;
  std::vector<int> cardinality;
  std::vector<std::vector<int>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t width() const { return names.size(); }
  /// Throws MissingColumn.
  int index_of(const std::string& name) const;
  void add_column(std::string name, int cardinality, std::vector<int> labels);
  /// Checks shape and label ranges; throws InvalidModel.
  void validate() const;
};

/// DAG over the nodes; node i of `nodes` is column i of the training data.
/// `parents[i]` lists parents in the order they were added.
struct Dag {
  std::vector<NodeSpec> nodes;
  std::vector<std::vector<int>> parents;
  std::vector<int> ordering;

  int size() const { return static_cast<int>(nodes.size()); }
  int index_of(const std::string& name) const;  // throws UnknownNode
  std::vector<std::pair<int, int>> edges() const;  // sorted (parent, child)
  std::vector<int> children_of(int node) const;
  bool is_acyclic() const;
  /// Every edge goes forward in `ordering`.
  bool respects_ordering() const;

  bool operator==(const Dag&) const = default;
};

/// P(node | parents). Row j is the mixed-radix index of the parent
/// configuration with the last parent varying fastest.
struct Cpt {
  int node = 0;
  std::vector<int> parents;
  std::vector<int> parent_cardinality;
  int cardinality = 1;
  std::vector<double> table;  // rows() x cardinality, row-major

  std::size_t rows() const { return table.size() / static_cast<std::size_t>(cardinality); }
  double at(std::size_t row, int value) const {
    return table[row * static_cast<std::size_t>(cardinality) + static_cast<std::size_t>(value)];
  }
  /// Row index for a full assignment indexed by node id.
  std::size_t row_of(const std::vector<int>& assignment) const;

  bool operator==(const Cpt&) const = default;
};

using Evidence = std::map<std::string, int>;

struct BayesianNetworkModel {
  Dag dag;
  std::vector<Cpt> cpts;  // cpts[i] belongs to dag.nodes[i]
  std::map<std::string, DiscretizationScheme> schemes;

  /// Checks CPT coverage, parent lists, stochastic rows; throws InvalidModel.
  void validate() const;
  int qos_node() const;  // -1 when absent

  bool operator==(const BayesianNetworkModel&) const = default;
};

struct LearnOptions {
  int max_parents = 3;
  double alpha = 1.0;
};

/// Empirical mutual information (nats) between two columns.
double mutual_information(const TraceDataset& data, int x, int y);

/// Contexts by decreasing mutual information with the QoS column (ties by
/// name), QoS last. Throws MissingColumn.
std::vector<std::string> order_nodes(const TraceDataset& data, const std::string& qos_node);

/// Log Cooper-Herskovits family score.
double ch_score(const TraceDataset& data, int node, const std::vector<int>& parents);
double ch_score(const TraceDataset& data, const std::string& node,
                const std::vector<std::string>& parents);

/// Greedy K2 search given a node ordering.
Dag k2_learn(const TraceDataset& data, const std::vector<std::string>& ordering,
             int max_parents);

/// Dirichlet-smoothed tables, theta = (N_ijk + alpha) / (N_ij + r alpha).
std::vector<Cpt> learn_parameters(const Dag& dag, const TraceDataset& data, double alpha);

/// Ordering, K2 structure and parameters in one call. Node roles: `qos_node`
/// becomes the QoS metric; names in `tunable` are marked tunable.
BayesianNetworkModel learn_model(const TraceDataset& data, const std::string& qos_node,
                                 const std::set<std::string>& tunable,
                                 const LearnOptions& options = {});

/// Exact posterior P(query | evidence) by variable elimination (min-degree
/// order). Throws UnknownNode, ImpossibleEvidence.
std::vector<double> infer_marginal(const BayesianNetworkModel& model, const Evidence& evidence,
                                   const std::string& query);

/// Brute-force posterior over the full joint. Throws StateSpaceTooLarge when
/// the product of cardinalities exceeds 1e7.
std::vector<double> joint_enumerate(const BayesianNetworkModel& model, const Evidence& evidence,
                                    const std::string& query);

std::set<std::string> parents_of(const Dag& dag, const std::string& node);
std::set<std::string> markov_blanket(const Dag& dag, const std::string& node);

}  // namespace cabin
