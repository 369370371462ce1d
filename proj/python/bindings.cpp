#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cabin/cli.hpp"
#include "cabin/errors.hpp"
#include "cabin/io.hpp"

namespace py = pybind11;
using cabin::io::Json;

namespace {

std::string dump(const Json& j) { return j.dump(); }

cabin::BayesianNetworkModel load_model(const std::string& text) {
  return cabin::io::model_from_json(Json::parse(text));
}

cabin::DiscretizationScheme load_scheme(const std::string& text) {
  return cabin::io::scheme_from_json(Json::parse(text));
}

cabin::ScenarioConfig load_scenario(const std::string& text) {
  cabin::ScenarioConfig cfg;
  if (!text.empty()) cabin::io::scenario_from_json(Json::parse(text), cfg);
  return cfg;
}

std::string build_scheme(const std::string& variable, const std::vector<double>& values,
                         int k_max, double epsilon) {
  cabin::DiscretizerOptions o;
  o.k_max = k_max;
  o.epsilon = epsilon;
  return dump(cabin::io::scheme_to_json(
      cabin::build_scheme_or_constant(cabin::SampleSeries{variable, values, ""}, o)));
}

std::vector<int> discretize(const std::string& scheme, const std::vector<double>& values) {
  const auto s = load_scheme(scheme);
  return cabin::discretize_series(s, cabin::SampleSeries{s.variable, values, ""}).labels;
}

std::string learn(const std::vector<std::string>& names, const std::vector<std::vector<int>>& columns,
                  const std::vector<int>& cardinality, const std::string& qos,
                  const std::vector<std::string>& tunable, int max_parents, double alpha) {
  if (names.size() != columns.size() || names.size() != cardinality.size())
    throw std::invalid_argument("names, columns and cardinality must have the same length");
  cabin::TraceDataset data;
  for (std::size_t i = 0; i < names.size(); ++i) data.add_column(names[i], cardinality[i], columns[i]);
  const auto model = cabin::learn_model(data, qos, {tunable.begin(), tunable.end()},
                                        cabin::LearnOptions{max_parents, alpha});
  return dump(cabin::io::model_to_json(model));
}

std::vector<double> infer(const std::string& model, const cabin::Evidence& evidence,
                          const std::string& query) {
  return cabin::infer_marginal(load_model(model), evidence, query);
}

std::string recommend(const std::string& model_text, const std::string& qos, int target,
                      const cabin::Evidence& evidence) {
  const auto model = load_model(model_text);
  return dump(cabin::io::recommendation_to_json(model, cabin::recommend(model, qos, target, evidence)));
}

std::string recommend_best(const std::string& model_text, const std::string& qos,
                           const cabin::Evidence& evidence, double p_min) {
  const auto model = load_model(model_text);
  const auto rec = cabin::recommend_best(model, qos, cabin::preference_by_value(model, qos),
                                         evidence, p_min);
  return dump(cabin::io::recommendation_to_json(model, rec));
}

std::pair<std::string, std::string> simulate(const std::string& scenario, const std::string& model_text) {
  const auto cfg = load_scenario(scenario);
  std::optional<cabin::BayesianNetworkModel> model;
  if (!model_text.empty()) model = load_model(model_text);
  py::gil_scoped_release release;
  const auto report = cabin::run_session(cfg, model ? &*model : nullptr);
  return {dump(cabin::io::session_summary_to_json(report)), cabin::io::trace_csv(report)};
}

std::string train(const std::string& scenario, int sessions, int participants, std::uint64_t seed) {
  cabin::TrainingOptions t;
  t.sessions = sessions;
  t.participants = participants;
  t.seed = seed;
  const auto configs = cabin::warmup_configs(load_scenario(scenario), t);
  py::gil_scoped_release release;
  return dump(cabin::io::model_to_json(cabin::train_cabin(configs, t.discretizer, t.learn)));
}

std::string compare(const std::string& scenario, const std::vector<int>& participants, int reps,
                    const std::vector<std::string>& strategies, std::uint64_t seed, int jobs,
                    const std::string& model_text) {
  cabin::ComparisonOptions o;
  o.base = load_scenario(scenario);
  o.participants = participants;
  o.reps = reps;
  o.strategies.clear();
  for (const auto& s : strategies) o.strategies.push_back(cabin::parse_strategy(s));
  o.first_seed = seed;
  o.jobs = jobs;
  std::optional<cabin::BayesianNetworkModel> model;
  if (!model_text.empty()) model = load_model(model_text);
  py::gil_scoped_release release;
  return cabin::io::comparison_csv(cabin::run_comparison(o, model ? &*model : nullptr));
}

std::tuple<int, std::string, std::string> run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cabin::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

PYBIND11_MODULE(_cabin, m) {
  m.doc() = "CABIN core: discretization, Bayesian-network learning, tuning and simulation";

  // Kept alive for the life of the interpreter.
  static py::handle error = py::exception<cabin::Error>(m, "CabinError").release();
  // The exit-code category travels as `code` on the raised exception.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cabin::Error& e) {
      py::object inst = error(e.what());
      inst.attr("code") = static_cast<int>(e.category());
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  m.def("build_scheme", &build_scheme, py::arg("variable"), py::arg("values"),
        py::arg("k_max") = 6, py::arg("epsilon") = 0.05,
        "Fit a discretization scheme; returns scheme JSON.");
  m.def("discretize", &discretize, py::arg("scheme"), py::arg("values"));
  m.def("label_to_value",
        [](const std::string& scheme, int label) { return cabin::label_to_value(load_scheme(scheme), label); },
        py::arg("scheme"), py::arg("label"));
  m.def("learn", &learn, py::arg("names"), py::arg("columns"), py::arg("cardinality"),
        py::arg("qos"), py::arg("tunable") = std::vector<std::string>{},
        py::arg("max_parents") = 3, py::arg("alpha") = 1.0,
        "K2 structure and Dirichlet parameters from discrete columns; returns model JSON.");
  m.def("infer", &infer, py::arg("model"), py::arg("evidence"), py::arg("query"));
  m.def("recommend", &recommend, py::arg("model"), py::arg("qos"), py::arg("target"),
        py::arg("evidence") = cabin::Evidence{});
  m.def("recommend_best", &recommend_best, py::arg("model"), py::arg("qos"),
        py::arg("evidence") = cabin::Evidence{}, py::arg("p_min") = 0.5);
  m.def("simulate", &simulate, py::arg("scenario") = "", py::arg("model") = "",
        "Run one session; returns (summary JSON, trace CSV).");
  m.def("train", &train, py::arg("scenario") = "", py::arg("sessions") = 4,
        py::arg("participants") = 8, py::arg("seed") = 1000);
  m.def("compare", &compare, py::arg("scenario") = "",
        py::arg("participants") = std::vector<int>{4, 8, 12, 16}, py::arg("reps") = 5,
        py::arg("strategies") = std::vector<std::string>{"cabin", "ton", "don"},
        py::arg("seed") = 1, py::arg("jobs") = 1, py::arg("model") = "",
        "Run the comparison grid; returns the report CSV.");
  m.def("run_cli", &run_cli, py::arg("args"), "Run a cabin command line; returns (code, stdout, stderr).");
}
