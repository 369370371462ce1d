#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "../common/fixtures.hpp"
#include "cabin/cli.hpp"
#include "cabin/io.hpp"

using namespace cabin;
using cabin::io::Json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("cabin_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Two-mode column x, constant column k, chain a -> b -> c as labels.
std::string write_trace(const TempDir& dir) {
  Rng rng(4);
  const auto x = testing::gaussian_mixture(rng, 600, {0.0, 10.0}, {1.0, 1.0});
  std::ostringstream csv;
  csv << "x,k,a,b,c\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int a = rng.uniform() < 0.5 ? 0 : 1;
    const int b = rng.uniform() < 0.9 ? a : 1 - a;
    const int c = rng.uniform() < 0.9 ? b : 1 - b;
    csv << x[i] << ",4," << a << "," << b << "," << c << "\n";
  }
  const auto path = dir.file("trace.csv");
  io::write_file(path, csv.str());
  return path;
}

std::string write_model(const TempDir& dir) {
  auto m = testing::make_model({
      {"bw", 2, {}, {0.5, 0.5}},
      {"rate", 3, {}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, NodeRole::context, true},
      {"psnr", 2, {"bw", "rate"}, {0.8, 0.2, 0.1, 0.9, 0.5, 0.5, 0.3, 0.7, 0.6, 0.4, 0.9, 0.1},
       NodeRole::qos_metric},
  });
  const auto path = dir.file("model.json");
  io::write_json(path, io::model_to_json(m));
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"discretize"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("discretize") {
  TempDir dir;
  const auto trace = write_trace(dir);
  const auto out = dir.file("x.json");
  auto r = run({"discretize", "--trace", trace, "--variable", "x", "--out", out});
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(out));
  CHECK(r.out.rfind("label,a,b,c\n", 0) == 0);
  CHECK(io::scheme_from_json(io::read_json(out)).size() == 2);

  r = run({"discretize", "--trace", trace, "--variable", "nope"});
  CHECK(r.code == 3);
  CHECK(r.err.find("unknown variable") != std::string::npos);

  r = run({"discretize", "--trace", trace, "--variable", "k"});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(io::scheme_from_json(Json::parse(r.out.substr(r.out.find('{')))).size() == 1);

  CHECK(run({"discretize", "--trace", dir.file("missing.csv"), "--variable", "x"}).code == 2);
}

TEST_CASE("learn") {
  TempDir dir;
  const auto trace = write_trace(dir);
  const auto model_path = dir.file("m.json");
  auto r = run({"learn", "--trace", trace, "--qos", "c", "--columns", "a,b,c", "--discrete",
                "--tunable", "b", "--out", model_path});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("direct causes of c: b") != std::string::npos);
  const auto m = io::model_from_json(io::read_json(model_path));
  const auto again = run({"learn", "--trace", trace, "--qos", "c", "--columns", "a,b,c",
                          "--discrete", "--tunable", "b", "--seed", "9"});
  CHECK(again.out == r.out);

  // Printed edges come straight from K2 on the same labels.
  const auto table = io::read_csv(trace);
  TraceDataset data;
  for (const auto& name : {"a", "b", "c"}) {
    std::vector<int> labels;
    for (double v : table.numeric_column(name)) labels.push_back(static_cast<int>(v));
    data.add_column(name, 2, labels);
  }
  CHECK(m.dag.edges() == k2_learn(data, order_nodes(data, "c"), 3).edges());

  CHECK(run({"learn", "--trace", trace, "--qos", "zz", "--columns", "a,b"}).code == 3);
}

TEST_CASE("tune") {
  TempDir dir;
  const auto model = write_model(dir);
  auto r = run({"tune", "--model", model, "--qos", "psnr", "--target", "1", "--evidence", "bw=0"});
  REQUIRE(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["assignment"]["rate"]["label"] == 1);
  CHECK(j["probability"].get<double>() == doctest::Approx(0.9));

  r = run({"tune", "--model", model, "--target", "best", "--evidence", "bw=1"});
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["target_label"] == 1);
  CHECK(j["assignment"]["rate"]["label"] == 0);

  r = run({"tune", "--model", model, "--target", "1", "--evidence", "rate=1"});
  CHECK(r.code == 4);
  CHECK(r.err.find("tunable nodes are outputs") != std::string::npos);
  CHECK(run({"tune", "--model", model, "--target", "1", "--evidence", "ghost=1"}).code == 4);
  CHECK(run({"tune", "--model", dir.file("none.json"), "--target", "1"}).code == 2);
}

TEST_CASE("simulate") {
  TempDir dir;
  const auto trace = dir.file("t.csv");
  auto r = run({"simulate", "--strategy", "ton", "--participants", "4", "--seed", "42",
                "--duration", "300", "--trace", trace});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j["frame_slots_per_participant"] == 7500);
  CHECK(io::read_csv(trace).rows.size() == 120 * 4);
  CHECK(run({"simulate", "--strategy", "ton", "--participants", "4", "--seed", "42"}).out == r.out);

  r = run({"simulate", "--strategy", "cabin"});
  CHECK(r.code == 2);
  CHECK(r.err.find("cabin train") != std::string::npos);
  CHECK(run({"simulate", "--tick", "0.3"}).code == 2);
}

TEST_CASE("config file precedence") {
  TempDir dir;
  const auto cfg = dir.file("run.json");
  io::write_json(cfg, Json{{"duration", 10}, {"participants", 2}, {"strategy", "don"}});
  auto r = run({"simulate", "--config", cfg});
  REQUIRE(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["config"]["participants"] == 2);
  CHECK(j["frame_slots_per_participant"] == 250);

  r = run({"simulate", "--config", cfg, "--participants", "3"});
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["config"]["participants"] == 3);
  CHECK(j["config"]["duration_s"] == 10.0);

  io::write_file(cfg, "[1,2]");
  CHECK(run({"simulate", "--config", cfg}).code == 2);
}

TEST_CASE("train and compare") {
  TempDir dir;
  const auto model = dir.file("m.json");
  REQUIRE(run({"train", "--sessions", "1", "--participants", "4", "--duration", "60", "--out", model})
              .code == 0);
  auto r = run({"compare", "--participants", "4,8", "--reps", "2", "--duration", "20", "--model",
                model, "--jobs", "2"});
  REQUIRE(r.code == 0);
  const auto t = io::parse_csv(r.out);
  CHECK(t.header == io::report_columns());
  CHECK(t.rows.size() == 2 * 3 * 3);

  r = run({"compare", "--participants", "4", "--reps", "1", "--duration", "20", "--strategies",
           "ton"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(io::parse_csv(r.out).rows[0][4].empty());
}

}  // TEST_SUITE
