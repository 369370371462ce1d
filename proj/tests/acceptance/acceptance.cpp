// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "../common/fixtures.hpp"
#include "cabin/bayesnet.hpp"
#include "cabin/discretizer.hpp"
#include "cabin/errors.hpp"
#include "cabin/io.hpp"
#include "cabin/simulator.hpp"
#include "cabin/tuner.hpp"

using namespace cabin;
using cabin::testing::make_model;
using cabin::testing::NodeDef;
using cabin::testing::random_rows;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// --- 1 ----------------------------------------------------------------------

Outcome inference_oracle() {
  Rng rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing::random_model(rng, 5, 2, 4, 0.5);
    Evidence ev;
    for (const auto& n : m.dag.nodes)
      if (rng.uniform() < 0.4) ev[n.name] = static_cast<int>(rng.uniform() * n.cardinality);
    const auto& query = m.dag.nodes[static_cast<std::size_t>(rng.uniform() * 5)].name;
    std::vector<double> ve, bf;
    try {
      ve = infer_marginal(m, ev, query);
      bf = joint_enumerate(m, ev, query);
    } catch (const ImpossibleEvidence&) {
      continue;  // random CPTs have no zeros, so this does not happen
    }
    for (std::size_t k = 0; k < ve.size(); ++k) worst = std::max(worst, std::abs(ve[k] - bf[k]));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "100 models, max |VE - joint| = %.3g", worst);
  return {worst <= 1e-9, buf};
}

// --- 2 ----------------------------------------------------------------------

std::vector<double> strong_rows(Rng& rng, int parents_card, int card) {
  std::vector<double> t;
  for (int j = 0; j < parents_card; ++j) {
    const double keep = rng.uniform(0.6, 0.9);
    for (int k = 0; k < card; ++k)
      t.push_back(k == j % card ? keep : (1.0 - keep) / (card - 1));
  }
  return t;
}

std::set<std::pair<int, int>> edge_set(const Dag& d) {
  const auto e = d.edges();
  return {e.begin(), e.end()};
}

Outcome structure_recovery() {
  int chain_hits = 0, v_hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(77, {seed}));
    const auto chain = make_model({
        {"A", 3, {}, random_rows(rng, 1, 3, 0.5)},
        {"B", 3, {"A"}, strong_rows(rng, 3, 3)},
        {"C", 3, {"B"}, strong_rows(rng, 3, 3)},
    });
    const auto cd = testing::sample(chain, 5000, rng);
    chain_hits += edge_set(k2_learn(cd, {"A", "B", "C"}, 2)) == edge_set(chain.dag);

    // Each parent shifts P(C = 1) on its own.
    std::vector<double> c_rows;
    const double base = rng.uniform(0.05, 0.2);
    const double ea = rng.uniform(0.25, 0.4), eb = rng.uniform(0.25, 0.4);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double p1 = base + ea * a + eb * b;
        c_rows.push_back(1.0 - p1);
        c_rows.push_back(p1);
      }
    const auto v = make_model({
        {"A", 2, {}, random_rows(rng, 1, 2, 0.5)},
        {"B", 2, {}, random_rows(rng, 1, 2, 0.5)},
        {"C", 2, {"A", "B"}, c_rows},
    });
    const auto vd = testing::sample(v, 5000, rng);
    v_hits += edge_set(k2_learn(vd, {"A", "B", "C"}, 2)) == edge_set(v.dag);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "chain %d/20, v-structure %d/20", chain_hits, v_hits);
  return {chain_hits >= 18 && v_hits >= 18, buf};
}

// --- 3 ----------------------------------------------------------------------

Outcome discretization_recovery() {
  int hits[2] = {0, 0};
  for (int comps = 2; comps <= 3; ++comps) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(derive_seed(303, {static_cast<std::uint64_t>(comps), seed}));
      std::vector<double> widths, means;
      for (int i = 0; i < comps; ++i) widths.push_back(rng.uniform(0.5, 1.5));
      const double wmax = *std::max_element(widths.begin(), widths.end());
      double at = rng.uniform(-10.0, 10.0);
      for (int i = 0; i < comps; ++i) {
        means.push_back(at);
        at += wmax * rng.uniform(6.0, 8.0);
      }
      const auto data = testing::gaussian_mixture(rng, 5000, means, widths);
      DiscretizationScheme s;
      try {
        s = build_scheme(SampleSeries{"x", data, ""});
      } catch (const Error&) {
        continue;
      }
      if (s.size() != comps) continue;
      bool ok = true;
      for (int i = 0; i < comps; ++i)
        ok = ok && std::abs(s.terms[static_cast<std::size_t>(i)].b - means[static_cast<std::size_t>(i)]) <=
                       0.5 * widths[static_cast<std::size_t>(i)];
      hits[comps - 2] += ok;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "2 components %d/20, 3 components %d/20", hits[0], hits[1]);
  return {hits[0] >= 18 && hits[1] >= 18, buf};
}

// --- 4 ----------------------------------------------------------------------

Outcome tuner_optimality() {
  Rng rng(4444);
  int exact = 0;
  long largest = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n_knobs = 1 + static_cast<int>(rng.uniform() * 4);
    std::vector<NodeDef> defs;
    defs.push_back({"ctx0", 2 + static_cast<int>(rng.uniform() * 2), {}, {}});
    defs.back().table = random_rows(rng, 1, defs.back().cardinality);
    defs.push_back({"ctx1", 2, {"ctx0"}, random_rows(rng, static_cast<std::size_t>(defs[0].cardinality), 2)});
    std::vector<std::string> qos_parents{"ctx1"};
    std::size_t qos_rows = 2;
    long combos = 1;
    for (int k = 0; k < n_knobs; ++k) {
      const int card = 2 + static_cast<int>(rng.uniform() * 5);
      const bool child_of_ctx = rng.uniform() < 0.5;
      NodeDef d{"knob" + std::to_string(k), card, {}, {}, NodeRole::context, true};
      if (child_of_ctx) d.parents = {"ctx0"};
      d.table = random_rows(rng, child_of_ctx ? static_cast<std::size_t>(defs[0].cardinality) : 1, card);
      defs.push_back(d);
      qos_parents.push_back(d.name);
      qos_rows *= static_cast<std::size_t>(card);
      combos *= card;
    }
    const int q_card = 2 + static_cast<int>(rng.uniform() * 3);
    defs.push_back({"qos", q_card, qos_parents, random_rows(rng, qos_rows, q_card), NodeRole::qos_metric});
    const auto m = make_model(defs);
    largest = std::max(largest, combos);

    Evidence observed;
    if (rng.uniform() < 0.7) observed["ctx0"] = static_cast<int>(rng.uniform() * defs[0].cardinality);
    if (rng.uniform() < 0.5) observed["ctx1"] = static_cast<int>(rng.uniform() * 2);
    const int target = static_cast<int>(rng.uniform() * q_card);

    // Oracle: enumerate every knob vector in lexicographic order and
    // evaluate each by brute force over the joint.
    const auto knobs = tunable_parents(m, "qos");
    std::vector<int> labels(knobs.size(), 0), best_labels;
    double best = -1.0;
    for (;;) {
      Evidence e = observed;
      for (std::size_t i = 0; i < knobs.size(); ++i) e[knobs[i]] = labels[i];
      const double p = joint_enumerate(m, e, "qos")[static_cast<std::size_t>(target)];
      if (p > best + 1e-13) {
        best = p;
        best_labels = labels;
      }
      std::size_t i = knobs.size();
      bool done = true;
      while (i > 0) {
        --i;
        const int card = m.dag.nodes[static_cast<std::size_t>(m.dag.index_of(knobs[i]))].cardinality;
        if (++labels[i] < card) {
          done = false;
          break;
        }
        labels[i] = 0;
      }
      if (done) break;
    }
    const auto rec = recommend(m, "qos", target, observed);
    bool same = std::abs(rec.probability - best) <= 1e-12;
    for (std::size_t i = 0; i < knobs.size(); ++i) same = same && rec.assignment.at(knobs[i]) == best_labels[i];
    exact += same;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d/50 match the exhaustive oracle (up to %ld combinations)", exact, largest);
  return {exact == 50, buf};
}

// --- 5 and 7 ------------------------------------------------------------------

std::string default_grid_csv(ComparisonReport* keep = nullptr) {
  ComparisonOptions o;
  o.jobs = jobs();
  auto report = run_comparison(o);
  if (keep) *keep = report;
  return io::comparison_csv(report);
}

std::string grid_csv_first;

Outcome orderings() {
  ComparisonReport r;
  grid_csv_first = default_grid_csv(&r);
  bool a = true, b = true, c = true;
  std::string detail;
  char buf[160];
  for (int n : {4, 8, 12, 16}) {
    const auto& cabin = r.row(n, Strategy::cabin);
    const auto& ton = r.row(n, Strategy::ton);
    const auto& don = r.row(n, Strategy::don);
    a = a && cabin.psnr_db.mean >= ton.psnr_db.mean && cabin.psnr_db.mean >= don.psnr_db.mean;
    b = b && don.playback_delay_ms.mean < cabin.playback_delay_ms.mean &&
        don.playback_delay_ms.mean < ton.playback_delay_ms.mean;
    c = c && ton.throughput_kbps.mean > cabin.throughput_kbps.mean &&
        ton.throughput_kbps.mean > don.throughput_kbps.mean;
    std::snprintf(buf, sizeof buf,
                  "; n=%d psnr %.2f/%.2f/%.2f delay %.0f/%.0f/%.0f tput %.0f/%.0f/%.0f", n,
                  cabin.psnr_db.mean, ton.psnr_db.mean, don.psnr_db.mean,
                  cabin.playback_delay_ms.mean, ton.playback_delay_ms.mean,
                  don.playback_delay_ms.mean, cabin.throughput_kbps.mean, ton.throughput_kbps.mean,
                  don.throughput_kbps.mean);
    detail += buf;
  }
  std::snprintf(buf, sizeof buf, "(a) psnr %s, (b) delay %s, (c) throughput %s [cabin/ton/don]",
                a ? "ok" : "NO", b ? "ok" : "NO", c ? "ok" : "NO");
  return {a && b && c, buf + detail};
}

Outcome determinism() {
  if (grid_csv_first.empty()) grid_csv_first = default_grid_csv();
  const auto dir = std::filesystem::temp_directory_path() / "cabin_acceptance";
  std::filesystem::create_directories(dir);
  const auto first = (dir / "report_1.csv").string();
  const auto second = (dir / "report_2.csv").string();
  io::write_file(first, grid_csv_first);
  io::write_file(second, default_grid_csv());
  const bool same = io::read_file(first) == io::read_file(second);
  const auto bytes = grid_csv_first.size();
  std::filesystem::remove_all(dir);
  return {same, (same ? "identical " : "different ") + std::to_string(bytes) + "-byte reports"};
}

// --- 6 ----------------------------------------------------------------------

// Empirical I(X; Y | Z) in nats, Z a set of columns.
double conditional_mi(const TraceDataset& d, int x, int y, const std::vector<int>& z) {
  std::map<std::vector<int>, std::map<std::pair<int, int>, double>> counts;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    std::vector<int> key;
    for (int c : z) key.push_back(d.columns[static_cast<std::size_t>(c)][r]);
    counts[key][{d.columns[static_cast<std::size_t>(x)][r], d.columns[static_cast<std::size_t>(y)][r]}] += 1.0;
  }
  const auto n = static_cast<double>(d.rows());
  double cmi = 0.0;
  for (const auto& [key, joint] : counts) {
    std::map<int, double> px, py;
    double nz = 0.0;
    for (const auto& [xy, c] : joint) {
      px[xy.first] += c;
      py[xy.second] += c;
      nz += c;
    }
    for (const auto& [xy, c] : joint) cmi += (c / n) * std::log(c * nz / (px[xy.first] * py[xy.second]));
  }
  return cmi;
}

Outcome markov_blanket_property() {
  Rng rng(606);
  // a -> b -> qos <- c, qos -> e <- d, a -> d
  const auto m = make_model({
      {"a", 3, {}, random_rows(rng, 1, 3, 0.3)},
      {"c", 2, {}, random_rows(rng, 1, 2, 0.3)},
      {"b", 3, {"a"}, strong_rows(rng, 3, 3)},
      {"d", 2, {"a"}, random_rows(rng, 3, 2, 0.1)},
      {"qos", 3, {"b", "c"}, random_rows(rng, 6, 3, 0.05), NodeRole::qos_metric},
      {"e", 2, {"qos", "d"}, random_rows(rng, 6, 2, 0.05)},
  });
  const auto data = testing::sample(m, 50000, rng);
  const auto blanket = markov_blanket(m.dag, "qos");
  std::vector<int> z;
  for (const auto& name : blanket) z.push_back(data.index_of(name));
  const int q = data.index_of("qos");

  // The learned network's blanket is checked the same way. QoS comes last in
  // the ordering, so its learned blanket is its parent set; the cap must
  // admit all four true blanket members.
  const auto learned = learn_model(data, "qos", {}, LearnOptions{4, 1.0});
  const auto learned_blanket = markov_blanket(learned.dag, "qos");
  std::vector<int> lz;
  for (const auto& name : learned_blanket) lz.push_back(data.index_of(name));

  double worst = 0.0, worst_learned = 0.0;
  for (std::size_t v = 0; v < data.width(); ++v) {
    const auto& name = data.names[v];
    if (static_cast<int>(v) == q) continue;
    if (!blanket.count(name)) worst = std::max(worst, conditional_mi(data, q, static_cast<int>(v), z));
    if (!learned_blanket.count(name))
      worst_learned = std::max(worst_learned, conditional_mi(data, q, static_cast<int>(v), lz));
  }
  std::string names;
  for (const auto& n : blanket) names += (names.empty() ? "" : ",") + n;
  char buf[160];
  std::snprintf(buf, sizeof buf, "blanket {%s}: max CMI %.4g nats; learned blanket: %.4g nats",
                names.c_str(), worst, worst_learned);
  return {worst < 0.01 && worst_learned < 0.01, buf};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "inference matches full-joint enumeration", 10.0, inference_oracle},
      {2, "K2 recovers chain and v-structure", 30.0, structure_recovery},
      {3, "discretization recovers mixture components", 60.0, discretization_recovery},
      {4, "tuner equals exhaustive enumeration", 30.0, tuner_optimality},
      {5, "strategy orderings on the default grid", 300.0, orderings},
      {6, "QoS independent of non-blanket nodes given the blanket", 60.0, markov_blanket_property},
      {7, "repeated grid gives byte-identical reports", 300.0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s [%d] %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
