#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cabin/bayesnet.hpp"
#include "cabin/random.hpp"

namespace cabin::testing {

struct NodeDef {
  std::string name;
  int cardinality;
  std::vector<std::string> parents;
  std::vector<double> table;  // row-major, last parent fastest
  NodeRole role = NodeRole::context;
  bool tunable = false;
};

// Nodes must be listed parents-first; that order is also the ordering.
inline BayesianNetworkModel make_model(const std::vector<NodeDef>& defs) {
  BayesianNetworkModel m;
  for (const auto& d : defs) m.dag.nodes.push_back({d.name, d.cardinality, d.role, d.tunable});
  m.dag.parents.resize(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) {
    Cpt cpt;
    cpt.node = static_cast<int>(i);
    cpt.cardinality = defs[i].cardinality;
    for (const auto& p : defs[i].parents) {
      const int pi = m.dag.index_of(p);
      cpt.parents.push_back(pi);
      cpt.parent_cardinality.push_back(m.dag.nodes[static_cast<std::size_t>(pi)].cardinality);
    }
    cpt.table = defs[i].table;
    m.dag.parents[i] = cpt.parents;
    m.cpts.push_back(std::move(cpt));
    m.dag.ordering.push_back(static_cast<int>(i));
  }
  return m;
}

inline std::vector<double> random_rows(Rng& rng, std::size_t rows, int card, double floor = 0.02) {
  std::vector<double> t;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(static_cast<std::size_t>(card));
    double s = 0.0;
    for (auto& v : row) s += (v = floor + rng.uniform());
    for (auto& v : row) t.push_back(v / s);
  }
  return t;
}

// Random DAG over n nodes in index order; each earlier node becomes a parent
// with probability edge_p, at most max_parents parents.
inline BayesianNetworkModel random_model(Rng& rng, int n, int card_lo, int card_hi, double edge_p,
                                         int max_parents = 3) {
  std::vector<NodeDef> defs;
  for (int i = 0; i < n; ++i) {
    NodeDef d;
    d.name = "n" + std::to_string(i);
    d.cardinality = card_lo + static_cast<int>(rng.uniform() * (card_hi - card_lo + 1));
    d.cardinality = std::min(d.cardinality, card_hi);
    std::size_t rows = 1;
    for (int j = 0; j < i; ++j) {
      if (static_cast<int>(d.parents.size()) >= max_parents) break;
      if (rng.uniform() < edge_p) {
        d.parents.push_back(defs[static_cast<std::size_t>(j)].name);
        rows *= static_cast<std::size_t>(defs[static_cast<std::size_t>(j)].cardinality);
      }
    }
    d.table = random_rows(rng, rows, d.cardinality);
    defs.push_back(std::move(d));
  }
  return make_model(defs);
}

inline int draw(Rng& rng, const Cpt& cpt, std::size_t row) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int v = 0; v < cpt.cardinality; ++v) {
    acc += cpt.at(row, v);
    if (u < acc) return v;
  }
  return cpt.cardinality - 1;
}

// Forward sampling; nodes must be stored in a topological order.
inline TraceDataset sample(const BayesianNetworkModel& m, std::size_t n, Rng& rng) {
  const auto k = m.dag.nodes.size();
  std::vector<std::vector<int>> cols(k, std::vector<int>(n));
  std::vector<int> assign(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto& cpt = m.cpts[i];
      assign[i] = draw(rng, cpt, cpt.row_of(assign));
      cols[i][r] = assign[i];
    }
  }
  TraceDataset d;
  for (std::size_t i = 0; i < k; ++i)
    d.add_column(m.dag.nodes[i].name, m.dag.nodes[i].cardinality, std::move(cols[i]));
  return d;
}

inline std::vector<double> gaussian_mixture(Rng& rng, std::size_t n, const std::vector<double>& means,
                                            const std::vector<double>& sds,
                                            const std::vector<double>& weights = {}) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> w = weights.empty() ? std::vector<double>(means.size(), 1.0) : weights;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < w.size() && u >= w[k]) u -= w[k++];
    out.push_back(means[k] + sds[k] * z(rng.engine()));
  }
  return out;
}

}  // namespace cabin::testing
