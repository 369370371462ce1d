#pragma once

#include <map>
#include <string>
#include <vector>

#include "cabin/bayesnet.hpp"

namespace cabin {

struct TuningRecommendation {
  std::string qos_node;
  int target_label = 0;
  std::map<std::string, int> assignment;  // tunable parent -> label
  double probability = 0.0;

  bool operator==(const TuningRecommendation&) const = default;
};

/// Tunable parents of the QoS node, in the model's learning order.
/// Throws NotAQosNode.
std::vector<std::string> tunable_parents(const BayesianNetworkModel& model,
                                         const std::string& qos_node);

/// Exhaustive argmax over joint assignments of the tunable parents of
/// P(qos = target | assignment, observed). Equal probabilities resolve to the
/// lexicographically smallest label vector. Throws TunableEvidence when
/// `observed` sets a tunable node.
TuningRecommendation recommend(const BayesianNetworkModel& model, const std::string& qos_node,
                               int target, const Evidence& observed);

/// First target in `preference` whose best probability reaches `p_min`;
/// otherwise the overall most probable (target, assignment) pair.
TuningRecommendation recommend_best(const BayesianNetworkModel& model,
                                    const std::string& qos_node,
                                    const std::vector<int>& preference, const Evidence& observed,
                                    double p_min = 0.5);

/// QoS labels ordered by descending term mean in the node's scheme.
std::vector<int> preference_by_value(const BayesianNetworkModel& model,
                                     const std::string& qos_node);

}  // namespace cabin
