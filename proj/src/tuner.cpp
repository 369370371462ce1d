#include "cabin/tuner.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "cabin/errors.hpp"

namespace cabin {

namespace {

int checked_qos(const BayesianNetworkModel& model, const std::string& qos_node) {
  const int q = model.dag.index_of(qos_node);
  if (model.dag.nodes[static_cast<std::size_t>(q)].role != NodeRole::qos_metric)
    throw NotAQosNode("'" + qos_node + "' is not a QoS metric node");
  return q;
}

}  // namespace

std::vector<std::string> tunable_parents(const BayesianNetworkModel& model,
                                         const std::string& qos_node) {
  const int q = checked_qos(model, qos_node);
  const auto& parents = model.dag.parents[static_cast<std::size_t>(q)];
  std::vector<int> tunable;
  for (int p : parents)
    if (model.dag.nodes[static_cast<std::size_t>(p)].tunable) tunable.push_back(p);

  std::vector<int> position(model.dag.nodes.size(), 0);
  for (std::size_t i = 0; i < model.dag.ordering.size(); ++i)
    position[static_cast<std::size_t>(model.dag.ordering[i])] = static_cast<int>(i);
  std::sort(tunable.begin(), tunable.end(), [&](int l, int r) {
    return position[static_cast<std::size_t>(l)] < position[static_cast<std::size_t>(r)];
  });

  std::vector<std::string> out;
  for (int p : tunable) out.push_back(model.dag.nodes[static_cast<std::size_t>(p)].name);
  return out;
}

TuningRecommendation recommend(const BayesianNetworkModel& model, const std::string& qos_node,
                               int target, const Evidence& observed) {
  const int q = checked_qos(model, qos_node);
  if (target < 0 || target >= model.dag.nodes[static_cast<std::size_t>(q)].cardinality)
    throw LabelOutOfRange("target label " + std::to_string(target) + " out of range");
  for (const auto& [name, label] : observed) {
    const int idx = model.dag.index_of(name);
    if (model.dag.nodes[static_cast<std::size_t>(idx)].tunable)
      throw TunableEvidence("tunable nodes are outputs; '" + name + "' cannot be evidence");
  }

  const auto knobs = tunable_parents(model, qos_node);
  std::vector<int> card;
  for (const auto& k : knobs)
    card.push_back(model.dag.nodes[static_cast<std::size_t>(model.dag.index_of(k))].cardinality);

  TuningRecommendation best{qos_node, target, {}, -1.0};
  std::vector<int> labels(knobs.size(), 0);
  Evidence evidence = observed;
  // Odometer over label vectors in lexicographic order; strict improvement
  // keeps the smallest vector among ties.
  for (;;) {
    for (std::size_t i = 0; i < knobs.size(); ++i) evidence[knobs[i]] = labels[i];
    const double p =
        infer_marginal(model, evidence, qos_node)[static_cast<std::size_t>(target)];
    if (p > best.probability) {
      best.probability = p;
      best.assignment.clear();
      for (std::size_t i = 0; i < knobs.size(); ++i) best.assignment[knobs[i]] = labels[i];
    }
    std::size_t i = knobs.size();
    bool done = true;
    while (i > 0) {
      --i;
      if (++labels[i] < card[i]) {
        done = false;
        break;
      }
      labels[i] = 0;
    }
    if (done) break;
  }
  return best;
}

TuningRecommendation recommend_best(const BayesianNetworkModel& model,
                                    const std::string& qos_node,
                                    const std::vector<int>& preference, const Evidence& observed,
                                    double p_min) {
  const int q = checked_qos(model, qos_node);
  const int card = model.dag.nodes[static_cast<std::size_t>(q)].cardinality;
  std::vector<int> sorted = preference;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(static_cast<std::size_t>(card));
  std::iota(expected.begin(), expected.end(), 0);
  if (sorted != expected)
    throw std::invalid_argument("preference must be a permutation of the QoS labels");

  std::optional<TuningRecommendation> fallback;
  for (int target : preference) {
    auto rec = recommend(model, qos_node, target, observed);
    if (rec.probability >= p_min) return rec;
    if (!fallback || rec.probability > fallback->probability) fallback = std::move(rec);
  }
  return *fallback;
}

std::vector<int> preference_by_value(const BayesianNetworkModel& model,
                                     const std::string& qos_node) {
  const int q = checked_qos(model, qos_node);
  const int card = model.dag.nodes[static_cast<std::size_t>(q)].cardinality;
  std::vector<int> labels(static_cast<std::size_t>(card));
  std::iota(labels.begin(), labels.end(), 0);
  auto it = model.schemes.find(qos_node);
  if (it == model.schemes.end() || it->second.size() != card) {
    std::reverse(labels.begin(), labels.end());
    return labels;
  }
  const auto& terms = it->second.terms;
  std::stable_sort(labels.begin(), labels.end(), [&](int l, int r) {
    return terms[static_cast<std::size_t>(l)].b > terms[static_cast<std::size_t>(r)].b;
  });
  return labels;
}

}  // namespace cabin
