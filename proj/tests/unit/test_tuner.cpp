#include "doctest.h"

#include "../common/fixtures.hpp"
#include "cabin/errors.hpp"
#include "cabin/tuner.hpp"

using namespace cabin;
using cabin::testing::make_model;
using cabin::testing::NodeDef;
using cabin::testing::random_rows;

namespace {

// rate (tunable, 3 labels) -> psnr (2 labels); P(psnr=1 | rate) = {0.2, 0.9, 0.5}.
BayesianNetworkModel rate_model() {
  auto m = make_model({
      {"rate", 3, {}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, NodeRole::context, true},
      {"psnr", 2, {"rate"}, {0.8, 0.2, 0.1, 0.9, 0.5, 0.5}, NodeRole::qos_metric},
  });
  return m;
}

}  // namespace

TEST_SUITE("tuner") {

TEST_CASE("tunable parents") {
  const auto m = make_model({
      {"video_rate", 2, {}, {0.5, 0.5}, NodeRole::context, true},
      {"avail_bw", 2, {}, {0.5, 0.5}},
      {"psnr", 2, {"video_rate", "avail_bw"}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, NodeRole::qos_metric},
  });
  CHECK(tunable_parents(m, "psnr") == std::vector<std::string>{"video_rate"});
  CHECK_THROWS_AS(tunable_parents(m, "avail_bw"), NotAQosNode);
  CHECK_THROWS_AS(tunable_parents(m, "missing"), UnknownNode);

  const auto lone = make_model({{"psnr", 2, {}, {0.4, 0.6}, NodeRole::qos_metric}});
  CHECK(tunable_parents(lone, "psnr").empty());
  const auto untunable = make_model({
      {"bw", 2, {}, {0.5, 0.5}},
      {"psnr", 2, {"bw"}, {0.9, 0.1, 0.2, 0.8}, NodeRole::qos_metric},
  });
  CHECK(tunable_parents(untunable, "psnr").empty());
}

TEST_CASE("direct row argmax") {
  const auto rec = recommend(rate_model(), "psnr", 1, {});
  CHECK(rec.assignment == std::map<std::string, int>{{"rate", 1}});
  CHECK(rec.probability == doctest::Approx(0.9));
  CHECK(rec.target_label == 1);
  CHECK(rec.qos_node == "psnr");

  const auto low = recommend(rate_model(), "psnr", 0, {});
  CHECK(low.assignment.at("rate") == 0);
  CHECK(low.probability == doctest::Approx(0.8));
}

TEST_CASE("nothing to tune returns the current marginal") {
  const auto m = make_model({
      {"bw", 2, {}, {0.3, 0.7}},
      {"psnr", 2, {"bw"}, {0.9, 0.1, 0.2, 0.8}, NodeRole::qos_metric},
  });
  const auto rec = recommend(m, "psnr", 1, {});
  CHECK(rec.assignment.empty());
  CHECK(rec.probability == doctest::Approx(0.3 * 0.1 + 0.7 * 0.8));
  CHECK(recommend(m, "psnr", 1, {{"bw", 0}}).probability == doctest::Approx(0.1));
}

TEST_CASE("ties resolve to the smallest label vector") {
  const auto m = make_model({
      {"r", 3, {}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, NodeRole::context, true},
      {"q", 2, {"r"}, {0.5, 0.5, 0.2, 0.8, 0.2, 0.8}, NodeRole::qos_metric},
  });
  CHECK(recommend(m, "q", 1, {}).assignment.at("r") == 1);
}

TEST_CASE("two tunable parents match the 12-combination oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = make_model({
        {"ctx", 2, {}, random_rows(rng, 1, 2)},
        {"t1", 3, {}, random_rows(rng, 1, 3), NodeRole::context, true},
        {"t2", 4, {"ctx"}, random_rows(rng, 2, 4), NodeRole::context, true},
        {"q", 3, {"ctx", "t1", "t2"}, random_rows(rng, 24, 3), NodeRole::qos_metric},
    });
    const Evidence obs{{"ctx", trial % 2}};
    for (int target = 0; target < 3; ++target) {
      double best = -1.0;
      std::map<std::string, int> arg;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 4; ++b) {
          Evidence e = obs;
          e["t1"] = a;
          e["t2"] = b;
          const double p = joint_enumerate(m, e, "q")[static_cast<std::size_t>(target)];
          if (p > best + 1e-12) {
            best = p;
            arg = {{"t1", a}, {"t2", b}};
          }
        }
      const auto rec = recommend(m, "q", target, obs);
      CHECK(rec.assignment == arg);
      CHECK(rec.probability == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("preconditions") {
  const auto m = rate_model();
  CHECK_THROWS_AS(recommend(m, "psnr", 1, {{"rate", 0}}), TunableEvidence);
  CHECK_THROWS_AS(recommend(m, "rate", 1, {}), NotAQosNode);
  CHECK_THROWS_AS(recommend(m, "psnr", 2, {}), LabelOutOfRange);
  CHECK_THROWS_AS(recommend(m, "psnr", 1, {{"nope", 0}}), UnknownNode);
  CHECK_THROWS_AS(recommend_best(m, "psnr", {1, 1}, {}), std::invalid_argument);
}

TEST_CASE("preference walk") {
  const auto m = rate_model();
  SUBCASE("first hit") {
    const auto rec = recommend_best(m, "psnr", {1, 0}, {}, 0.5);
    CHECK(rec.target_label == 1);
    CHECK(rec.probability == doctest::Approx(0.9));
  }
  SUBCASE("fallback to the most probable pair") {
    const auto rec = recommend_best(m, "psnr", {1, 0}, {}, 0.99);
    CHECK(rec.target_label == 1);
    CHECK(rec.assignment.at("rate") == 1);
    const auto rev = recommend_best(m, "psnr", {0, 1}, {}, 0.85);
    CHECK(rev.target_label == 1);
  }
  SUBCASE("skipped targets never beat the returned one") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const auto r = make_model({
          {"rate", 4, {}, random_rows(rng, 1, 4), NodeRole::context, true},
          {"psnr", 3, {"rate"}, random_rows(rng, 4, 3), NodeRole::qos_metric},
      });
      const std::vector<int> pref{2, 1, 0};
      const auto rec = recommend_best(r, "psnr", pref, {}, 0.5);
      for (int t : pref) {
        if (t == rec.target_label) break;
        CHECK(recommend(r, "psnr", t, {}).probability <= rec.probability);
      }
    }
  }
}

TEST_CASE("preference by scheme mean") {
  auto m = rate_model();
  CHECK(preference_by_value(m, "psnr") == std::vector<int>{1, 0});
  DiscretizationScheme s;
  s.variable = "psnr";
  s.terms = {{1.0, 40.0, 2.0}, {1.0, 30.0, 2.0}};
  s.normalized = true;
  m.schemes["psnr"] = s;
  CHECK(preference_by_value(m, "psnr") == std::vector<int>{0, 1});
}

}  // TEST_SUITE
