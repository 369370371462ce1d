#include "cabin/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "cabin/errors.hpp"

namespace cabin {

// ---------------------------------------------------------------------------
// TraceDataset / Dag / Cpt helpers

int TraceDataset::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw MissingColumn("unknown variable '" + name + "'");
  return static_cast<int>(it - names.begin());
}

void TraceDataset::add_column(std::string name, int card, std::vector<int> labels) {
  if (!columns.empty() && labels.size() != rows())
    throw InvalidModel("column '" + name + "' has mismatched length");
  names.push_back(std::move(name));
  cardinality.push_back(card);
  columns.push_back(std::move(labels));
}

void TraceDataset::validate() const {
  if (names.size() != cardinality.size() || names.size() != columns.size())
    throw InvalidModel("dataset shape mismatch");
  const std::size_t n = rows();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (cardinality[c] < 1) throw InvalidModel("column '" + names[c] + "' has cardinality < 1");
    if (columns[c].size() != n) throw InvalidModel("column '" + names[c] + "' is ragged");
    for (int v : columns[c])
      if (v < 0 || v >= cardinality[c])
        throw InvalidModel("column '" + names[c] + "' has a label outside its cardinality");
  }
}

int Dag::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return static_cast<int>(i);
  throw UnknownNode("unknown node '" + name + "'");
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t c = 0; c < parents.size(); ++c)
    for (int p : parents[c]) out.emplace_back(p, static_cast<int>(c));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Dag::children_of(int node) const {
  std::vector<int> out;
  for (std::size_t c = 0; c < parents.size(); ++c)
    if (std::find(parents[c].begin(), parents[c].end(), node) != parents[c].end())
      out.push_back(static_cast<int>(c));
  return out;
}

bool Dag::is_acyclic() const {
  const std::size_t n = nodes.size();
  std::vector<int> indegree(n, 0);
  for (std::size_t c = 0; c < n; ++c) indegree[c] = static_cast<int>(parents[c].size());
  std::vector<int> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
  std::size_t seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int c : children_of(v))
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
  }
  return seen == n;
}

bool Dag::respects_ordering() const {
  std::vector<int> position(nodes.size(), -1);
  for (std::size_t i = 0; i < ordering.size(); ++i)
    position[static_cast<std::size_t>(ordering[i])] = static_cast<int>(i);
  for (auto [p, c] : edges())
    if (position[static_cast<std::size_t>(p)] >= position[static_cast<std::size_t>(c)])
      return false;
  return true;
}

std::size_t Cpt::row_of(const std::vector<int>& assignment) const {
  std::size_t row = 0;
  for (std::size_t i = 0; i < parents.size(); ++i)
    row = row * static_cast<std::size_t>(parent_cardinality[i]) +
          static_cast<std::size_t>(assignment[static_cast<std::size_t>(parents[i])]);
  return row;
}

void BayesianNetworkModel::validate() const {
  const std::size_t n = dag.nodes.size();
  if (dag.parents.size() != n) throw InvalidModel("parent lists do not cover all nodes");
  if (cpts.size() != n) throw InvalidModel("CPTs do not cover all nodes");
  int qos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Cpt& cpt = cpts[i];
    const NodeSpec& spec = dag.nodes[i];
    if (spec.role == NodeRole::qos_metric) ++qos;
    if (cpt.node != static_cast<int>(i) || cpt.cardinality != spec.cardinality)
      throw InvalidModel("CPT for '" + spec.name + "' does not match its node");
    if (cpt.parents != dag.parents[i])
      throw InvalidModel("CPT parents for '" + spec.name + "' differ from the DAG");
    std::size_t rows = 1;
    for (std::size_t p = 0; p < cpt.parents.size(); ++p) {
      const auto parent = static_cast<std::size_t>(cpt.parents[p]);
      if (parent >= n || cpt.parent_cardinality[p] != dag.nodes[parent].cardinality)
        throw InvalidModel("CPT for '" + spec.name + "' has a bad parent");
      rows *= static_cast<std::size_t>(cpt.parent_cardinality[p]);
    }
    if (cpt.table.size() != rows * static_cast<std::size_t>(cpt.cardinality))
      throw InvalidModel("CPT for '" + spec.name + "' has the wrong size");
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (int k = 0; k < cpt.cardinality; ++k) {
        const double v = cpt.at(r, k);
        if (!(v >= 0.0)) throw InvalidModel("CPT for '" + spec.name + "' has a negative entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidModel("CPT row for '" + spec.name + "' does not sum to 1");
    }
  }
  if (qos > 1) throw InvalidModel("more than one QoS metric node");
  if (!dag.is_acyclic()) throw InvalidModel("graph has a cycle");
}

int BayesianNetworkModel::qos_node() const {
  for (std::size_t i = 0; i < dag.nodes.size(); ++i)
    if (dag.nodes[i].role == NodeRole::qos_metric) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// Counting and scores

namespace {

// N_ijk for a family; index j over parent configurations (last parent
// fastest), stored sparsely when the configuration space is large.
class FamilyCounts {
 public:
  FamilyCounts(const TraceDataset& data, int node, const std::vector<int>& parents)
      : r_(data.cardinality[static_cast<std::size_t>(node)]) {
    std::size_t configs = 1;
    for (int p : parents) configs *= static_cast<std::size_t>(data.cardinality[static_cast<std::size_t>(p)]);
    const auto& child = data.columns[static_cast<std::size_t>(node)];
    const std::size_t n = data.rows();
    std::vector<std::size_t> j(n, 0);
    for (int p : parents) {
      const auto& col = data.columns[static_cast<std::size_t>(p)];
      const auto card = static_cast<std::size_t>(data.cardinality[static_cast<std::size_t>(p)]);
      for (std::size_t row = 0; row < n; ++row)
        j[row] = j[row] * card + static_cast<std::size_t>(col[row]);
    }
    configs_ = configs;
    for (std::size_t row = 0; row < n; ++row) {
      auto& counts = cells_[j[row]];
      if (counts.empty()) counts.assign(static_cast<std::size_t>(r_), 0);
      ++counts[static_cast<std::size_t>(child[row])];
    }
  }

  int r() const { return r_; }
  std::size_t configs() const { return configs_; }

  template <class F>
  void for_each_observed(F&& f) const {
    std::vector<std::size_t> keys;
    keys.reserve(cells_.size());
    for (const auto& kv : cells_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    for (auto key : keys) f(key, cells_.at(key));
  }

 private:
  int r_;
  std::size_t configs_ = 1;
  std::unordered_map<std::size_t, std::vector<long>> cells_;
};

}  // namespace

double mutual_information(const TraceDataset& data, int x, int y) {
  const std::size_t n = data.rows();
  if (n == 0) return 0.0;
  const auto rx = static_cast<std::size_t>(data.cardinality[static_cast<std::size_t>(x)]);
  const auto ry = static_cast<std::size_t>(data.cardinality[static_cast<std::size_t>(y)]);
  std::vector<double> joint(rx * ry, 0.0), px(rx, 0.0), py(ry, 0.0);
  const auto& cx = data.columns[static_cast<std::size_t>(x)];
  const auto& cy = data.columns[static_cast<std::size_t>(y)];
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(cx[i]);
    const auto b = static_cast<std::size_t>(cy[i]);
    joint[a * ry + b] += 1.0;
    px[a] += 1.0;
    py[b] += 1.0;
  }
  const auto nn = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t a = 0; a < rx; ++a)
    for (std::size_t b = 0; b < ry; ++b) {
      const double c = joint[a * ry + b];
      if (c > 0.0) mi += (c / nn) * std::log(c * nn / (px[a] * py[b]));
    }
  return std::max(mi, 0.0);
}

std::vector<std::string> order_nodes(const TraceDataset& data, const std::string& qos_node) {
  const int qos = data.index_of(qos_node);
  if (data.width() < 2) throw MissingColumn("ordering needs the QoS column and a context");
  std::vector<std::pair<double, std::string>> ranked;
  for (std::size_t c = 0; c < data.width(); ++c) {
    if (static_cast<int>(c) == qos) continue;
    ranked.emplace_back(mutual_information(data, static_cast<int>(c), qos), data.names[c]);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
    if (l.first != r.first) return l.first > r.first;
    return l.second < r.second;
  });
  std::vector<std::string> ordering;
  for (auto& [mi, name] : ranked) ordering.push_back(name);
  ordering.push_back(qos_node);
  return ordering;
}

double ch_score(const TraceDataset& data, int node, const std::vector<int>& parents) {
  const FamilyCounts counts(data, node, parents);
  const auto r = static_cast<double>(counts.r());
  const double lg_r = std::lgamma(r);
  double score = 0.0;
  counts.for_each_observed([&](std::size_t, const std::vector<long>& nijk) {
    long nij = 0;
    double term = lg_r;
    for (long c : nijk) {
      nij += c;
      term += std::lgamma(static_cast<double>(c) + 1.0);
    }
    term -= std::lgamma(static_cast<double>(nij) + r);
    score += term;
  });
  return score;
}

double ch_score(const TraceDataset& data, const std::string& node,
                const std::vector<std::string>& parents) {
  std::vector<int> idx;
  for (const auto& p : parents) idx.push_back(data.index_of(p));
  const int n = data.index_of(node);
  if (std::find(idx.begin(), idx.end(), n) != idx.end())
    throw std::invalid_argument("a node cannot be its own parent");
  return ch_score(data, n, idx);
}

Dag k2_learn(const TraceDataset& data, const std::vector<std::string>& ordering,
             int max_parents) {
  if (max_parents < 1) throw std::invalid_argument("max_parents must be >= 1");
  if (ordering.size() != data.width())
    throw std::invalid_argument("ordering must be a permutation of the columns");

  Dag dag;
  dag.nodes.resize(data.width());
  dag.parents.assign(data.width(), {});
  for (std::size_t c = 0; c < data.width(); ++c)
    dag.nodes[c] = {data.names[c], data.cardinality[c], NodeRole::context, false};
  std::vector<bool> placed(data.width(), false);
  for (const auto& name : ordering) {
    const int idx = data.index_of(name);
    if (placed[static_cast<std::size_t>(idx)])
      throw std::invalid_argument("ordering repeats '" + name + "'");
    placed[static_cast<std::size_t>(idx)] = true;
    dag.ordering.push_back(idx);
  }

  for (std::size_t pos = 0; pos < dag.ordering.size(); ++pos) {
    const int node = dag.ordering[pos];
    auto& parents = dag.parents[static_cast<std::size_t>(node)];
    double current = ch_score(data, node, parents);
    while (static_cast<int>(parents.size()) < max_parents) {
      int best = -1;
      double best_score = current;
      for (std::size_t q = 0; q < pos; ++q) {
        const int cand = dag.ordering[q];
        if (std::find(parents.begin(), parents.end(), cand) != parents.end()) continue;
        auto trial = parents;
        trial.push_back(cand);
        const double s = ch_score(data, node, trial);
        if (s > best_score) {
          best_score = s;
          best = cand;
        }
      }
      if (best < 0) break;
      parents.push_back(best);
      current = best_score;
    }
  }
  return dag;
}

std::vector<Cpt> learn_parameters(const Dag& dag, const TraceDataset& data, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  std::vector<Cpt> cpts;
  cpts.reserve(dag.nodes.size());
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    Cpt cpt;
    cpt.node = static_cast<int>(i);
    cpt.parents = dag.parents[i];
    cpt.cardinality = dag.nodes[i].cardinality;
    std::size_t rows = 1;
    for (int p : cpt.parents) {
      cpt.parent_cardinality.push_back(dag.nodes[static_cast<std::size_t>(p)].cardinality);
      rows *= static_cast<std::size_t>(cpt.parent_cardinality.back());
    }
    const auto r = static_cast<std::size_t>(cpt.cardinality);
    cpt.table.assign(rows * r, 1.0 / static_cast<double>(r));

    const int col = data.index_of(dag.nodes[i].name);
    std::vector<int> data_parents;
    for (int p : cpt.parents) data_parents.push_back(data.index_of(dag.nodes[static_cast<std::size_t>(p)].name));
    const FamilyCounts counts(data, col, data_parents);
    counts.for_each_observed([&](std::size_t j, const std::vector<long>& nijk) {
      const double nij = static_cast<double>(std::accumulate(nijk.begin(), nijk.end(), 0L));
      const double denom = nij + static_cast<double>(r) * alpha;
      for (std::size_t k = 0; k < r; ++k)
        cpt.table[j * r + k] = (static_cast<double>(nijk[k]) + alpha) / denom;
    });
    cpts.push_back(std::move(cpt));
  }
  return cpts;
}

BayesianNetworkModel learn_model(const TraceDataset& data, const std::string& qos_node,
                                 const std::set<std::string>& tunable,
                                 const LearnOptions& options) {
  data.validate();
  BayesianNetworkModel model;
  model.dag = k2_learn(data, order_nodes(data, qos_node), options.max_parents);
  for (auto& spec : model.dag.nodes) {
    spec.role = spec.name == qos_node ? NodeRole::qos_metric : NodeRole::context;
    spec.tunable = spec.role == NodeRole::context && tunable.count(spec.name) > 0;
  }
  model.cpts = learn_parameters(model.dag, data, options.alpha);
  return model;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

// Table over a sorted list of variables; the last variable varies fastest.
struct Factor {
  std::vector<int> vars;
  std::vector<int> card;
  std::vector<double> values;

  std::size_t stride_of(std::size_t pos) const {
    std::size_t s = 1;
    for (std::size_t i = pos + 1; i < card.size(); ++i) s *= static_cast<std::size_t>(card[i]);
    return s;
  }
};

// Iterates every assignment of `card` in row-major order.
template <class F>
void for_each_assignment(const std::vector<int>& card, F&& f) {
  std::vector<int> a(card.size(), 0);
  for (;;) {
    f(a);
    std::size_t i = card.size();
    while (i > 0) {
      --i;
      if (++a[i] < card[i]) break;
      a[i] = 0;
      if (i == 0) return;
    }
    if (card.empty()) return;
  }
}

Factor factor_from_cpt(const Cpt& cpt, const std::vector<int>& evidence) {
  std::vector<std::pair<int, int>> scope;  // (var, cardinality)
  for (std::size_t p = 0; p < cpt.parents.size(); ++p)
    scope.emplace_back(cpt.parents[p], cpt.parent_cardinality[p]);
  scope.emplace_back(cpt.node, cpt.cardinality);
  std::sort(scope.begin(), scope.end());

  Factor f;
  for (auto [v, c] : scope)
    if (evidence[static_cast<std::size_t>(v)] < 0) {
      f.vars.push_back(v);
      f.card.push_back(c);
    }
  std::size_t size = 1;
  for (int c : f.card) size *= static_cast<std::size_t>(c);
  f.values.resize(size);

  std::vector<int> full = evidence;
  std::size_t idx = 0;
  for_each_assignment(f.card, [&](const std::vector<int>& a) {
    for (std::size_t i = 0; i < a.size(); ++i) full[static_cast<std::size_t>(f.vars[i])] = a[i];
    f.values[idx++] = cpt.at(cpt.row_of(full), full[static_cast<std::size_t>(cpt.node)]);
  });
  return f;
}

Factor multiply(const Factor& l, const Factor& r) {
  Factor out;
  std::size_t i = 0, j = 0;
  while (i < l.vars.size() || j < r.vars.size()) {
    if (j == r.vars.size() || (i < l.vars.size() && l.vars[i] < r.vars[j])) {
      out.vars.push_back(l.vars[i]);
      out.card.push_back(l.card[i++]);
    } else if (i == l.vars.size() || r.vars[j] < l.vars[i]) {
      out.vars.push_back(r.vars[j]);
      out.card.push_back(r.card[j++]);
    } else {
      out.vars.push_back(l.vars[i]);
      out.card.push_back(l.card[i]);
      ++i;
      ++j;
    }
  }
  auto strides_into = [&](const Factor& f) {
    std::vector<std::size_t> s(out.vars.size(), 0);
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
      const auto pos = static_cast<std::size_t>(
          std::find(out.vars.begin(), out.vars.end(), f.vars[k]) - out.vars.begin());
      s[pos] = f.stride_of(k);
    }
    return s;
  };
  const auto ls = strides_into(l);
  const auto rs = strides_into(r);
  std::size_t size = 1;
  for (int c : out.card) size *= static_cast<std::size_t>(c);
  out.values.resize(size);
  std::size_t idx = 0;
  for_each_assignment(out.card, [&](const std::vector<int>& a) {
    std::size_t li = 0, ri = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      li += ls[k] * static_cast<std::size_t>(a[k]);
      ri += rs[k] * static_cast<std::size_t>(a[k]);
    }
    out.values[idx++] = l.values[li] * r.values[ri];
  });
  return out;
}

Factor sum_out(const Factor& f, int var) {
  const auto pos = static_cast<std::size_t>(
      std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  Factor out;
  for (std::size_t k = 0; k < f.vars.size(); ++k)
    if (k != pos) {
      out.vars.push_back(f.vars[k]);
      out.card.push_back(f.card[k]);
    }
  std::size_t size = 1;
  for (int c : out.card) size *= static_cast<std::size_t>(c);
  out.values.assign(size, 0.0);
  const std::size_t stride = f.stride_of(pos);
  const auto c = static_cast<std::size_t>(f.card[pos]);
  // Index decomposition: f index = outer * (c * stride) + v * stride + inner.
  const std::size_t outer = f.values.size() / (c * stride);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t v = 0; v < c; ++v)
      for (std::size_t in = 0; in < stride; ++in)
        out.values[o * stride + in] += f.values[(o * c + v) * stride + in];
  return out;
}

std::vector<int> resolve_evidence(const BayesianNetworkModel& model, const Evidence& evidence) {
  std::vector<int> ev(model.dag.nodes.size(), -1);
  for (const auto& [name, label] : evidence) {
    const int idx = model.dag.index_of(name);
    if (label < 0 || label >= model.dag.nodes[static_cast<std::size_t>(idx)].cardinality)
      throw LabelOutOfRange("evidence label " + std::to_string(label) + " out of range for '" +
                            name + "'");
    ev[static_cast<std::size_t>(idx)] = label;
  }
  return ev;
}

std::vector<double> normalized_or_throw(std::vector<double> p) {
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(z > 0.0) || !std::isfinite(z))
    throw ImpossibleEvidence("evidence has zero probability under the model");
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

std::vector<double> infer_marginal(const BayesianNetworkModel& model, const Evidence& evidence,
                                   const std::string& query) {
  const int q = model.dag.index_of(query);
  std::vector<int> ev = resolve_evidence(model, evidence);
  const int query_card = model.dag.nodes[static_cast<std::size_t>(q)].cardinality;
  const int fixed_query = ev[static_cast<std::size_t>(q)];

  std::vector<Factor> factors;
  factors.reserve(model.cpts.size());
  for (const auto& cpt : model.cpts) factors.push_back(factor_from_cpt(cpt, ev));

  // Hidden variables: neither query nor evidence.
  std::set<int> hidden;
  for (std::size_t v = 0; v < model.dag.nodes.size(); ++v)
    if (static_cast<int>(v) != q && ev[v] < 0) hidden.insert(static_cast<int>(v));

  while (!hidden.empty()) {
    int pick = -1;
    std::size_t pick_degree = 0;
    for (int v : hidden) {
      std::set<int> neighbours;
      for (const auto& f : factors)
        if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end())
          neighbours.insert(f.vars.begin(), f.vars.end());
      neighbours.erase(v);
      if (pick < 0 || neighbours.size() < pick_degree) {
        pick = v;
        pick_degree = neighbours.size();
      }
    }
    hidden.erase(pick);

    Factor product{{}, {}, {1.0}};
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (std::find(f.vars.begin(), f.vars.end(), pick) != f.vars.end())
        product = multiply(product, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(product, pick));
    factors = std::move(rest);
  }

  Factor joint{{}, {}, {1.0}};
  for (const auto& f : factors) joint = multiply(joint, f);

  if (fixed_query >= 0) {
    // Every factor is scalar here; the product is P(evidence).
    if (!(joint.values[0] > 0.0))
      throw ImpossibleEvidence("evidence has zero probability under the model");
    std::vector<double> point(static_cast<std::size_t>(query_card), 0.0);
    point[static_cast<std::size_t>(fixed_query)] = 1.0;
    return point;
  }
  return normalized_or_throw(joint.values);
}

std::vector<double> joint_enumerate(const BayesianNetworkModel& model, const Evidence& evidence,
                                    const std::string& query) {
  const int q = model.dag.index_of(query);
  const std::vector<int> ev = resolve_evidence(model, evidence);
  const std::size_t n = model.dag.nodes.size();

  double space = 1.0;
  for (const auto& node : model.dag.nodes) space *= node.cardinality;
  if (space > 1e7) throw StateSpaceTooLarge("joint state space exceeds 1e7 assignments");

  std::vector<int> card(n);
  for (std::size_t v = 0; v < n; ++v) card[v] = ev[v] >= 0 ? 1 : model.dag.nodes[v].cardinality;

  std::vector<double> out(static_cast<std::size_t>(model.dag.nodes[static_cast<std::size_t>(q)].cardinality), 0.0);
  std::vector<int> full(n);
  for_each_assignment(card, [&](const std::vector<int>& a) {
    for (std::size_t v = 0; v < n; ++v) full[v] = ev[v] >= 0 ? ev[v] : a[v];
    double p = 1.0;
    for (const auto& cpt : model.cpts)
      p *= cpt.at(cpt.row_of(full), full[static_cast<std::size_t>(cpt.node)]);
    out[static_cast<std::size_t>(full[static_cast<std::size_t>(q)])] += p;
  });
  return normalized_or_throw(std::move(out));
}

std::set<std::string> parents_of(const Dag& dag, const std::string& node) {
  const int idx = dag.index_of(node);
  std::set<std::string> out;
  for (int p : dag.parents[static_cast<std::size_t>(idx)])
    out.insert(dag.nodes[static_cast<std::size_t>(p)].name);
  return out;
}

std::set<std::string> markov_blanket(const Dag& dag, const std::string& node) {
  const int idx = dag.index_of(node);
  std::set<int> blanket(dag.parents[static_cast<std::size_t>(idx)].begin(),
                        dag.parents[static_cast<std::size_t>(idx)].end());
  for (int child : dag.children_of(idx)) {
    blanket.insert(child);
    for (int spouse : dag.parents[static_cast<std::size_t>(child)]) blanket.insert(spouse);
  }
  blanket.erase(idx);
  std::set<std::string> out;
  for (int v : blanket) out.insert(dag.nodes[static_cast<std::size_t>(v)].name);
  return out;
}

}  // namespace cabin
