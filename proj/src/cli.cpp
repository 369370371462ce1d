#include "cabin/cli.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "cabin/errors.hpp"
#include "cabin/io.hpp"

namespace cabin::cli {

namespace {

using io::Json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& text, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigInvalid(what + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigInvalid(what + ": expected a number, got '" + text + "'");
  return v;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw ConfigInvalid("expected name=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

// Scenario flags shared by train, simulate and compare. Unset flags leave
// the configuration untouched, so they override a --scenario file.
struct ScenarioFlags {
  std::string scenario_file;
  std::optional<double> duration, tick, epoch, capacity, noise, min_rate, max_rate, fps, startup,
      initial_rate, fixed_rate;
  std::optional<bool> background;

  void attach(CLI::App* app) {
    app->add_option("--scenario", scenario_file, "Scenario JSON (full simulator configuration)");
    app->add_option("--duration", duration, "Session length in seconds");
    app->add_option("--tick", tick, "Simulation tick in seconds");
    app->add_option("--epoch", epoch, "Adaptation epoch in seconds");
    app->add_option("--capacity", capacity, "Bottleneck capacity per participant, kbps");
    app->add_option("--noise", noise, "Relative bandwidth-estimate noise");
    app->add_option("--min-rate", min_rate, "Lowest video rate, kbps");
    app->add_option("--max-rate", max_rate, "Highest video rate, kbps");
    app->add_option("--fps", fps, "Frame rate");
    app->add_option("--startup", startup, "Startup buffering delay in seconds");
    app->add_option("--initial-rate", initial_rate, "Rate before the first decision, kbps");
    app->add_option("--fixed-rate", fixed_rate, "Rate of the fixed strategy, kbps");
    app->add_option("--background", background, "Enable background traffic (true/false)");
  }

  ScenarioConfig build() const {
    ScenarioConfig cfg;
    if (!scenario_file.empty()) io::scenario_from_json(io::read_json(scenario_file), cfg);
    if (duration) cfg.duration_s = *duration;
    if (tick) cfg.tick_s = *tick;
    if (epoch) cfg.epoch_s = *epoch;
    if (capacity) cfg.base_capacity_kbps = *capacity;
    if (noise) cfg.bw_noise_frac = *noise;
    if (min_rate) cfg.min_rate_kbps = *min_rate;
    if (max_rate) cfg.max_rate_kbps = *max_rate;
    if (fps) cfg.frame_rate_fps = *fps;
    if (startup) cfg.startup_delay_s = *startup;
    if (initial_rate) cfg.initial_rate_kbps = *initial_rate;
    if (fixed_rate) cfg.fixed_rate_kbps = *fixed_rate;
    if (background) cfg.background_traffic = *background;
    return cfg;
  }
};

struct DiscretizerFlags {
  int k_max = 6;
  double epsilon = 0.05;

  void attach(CLI::App* app) {
    app->add_option("--k-max", k_max, "Largest mixture order tried")->check(CLI::Range(1, 12));
    app->add_option("--epsilon", epsilon, "Model-order slack on the minimum RMSE")
        ->check(CLI::Range(0.0, 1.0));
  }
  DiscretizerOptions build() const {
    DiscretizerOptions o;
    o.k_max = k_max;
    o.epsilon = epsilon;
    return o;
  }
};

struct LearnFlags {
  int max_parents = 3;
  double alpha = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--max-parents", max_parents, "K2 parent limit")->check(CLI::Range(0, 16));
    app->add_option("--alpha", alpha, "Dirichlet pseudo-count")
        ->check(CLI::PositiveNumber);
  }
  LearnOptions build() const { return {max_parents, alpha}; }
};

void print_structure(std::ostream& out, const BayesianNetworkModel& model) {
  const auto& dag = model.dag;
  out << "edges:\n";
  for (auto [p, c] : dag.edges())
    out << "  " << dag.nodes[static_cast<std::size_t>(p)].name << " -> "
        << dag.nodes[static_cast<std::size_t>(c)].name << "\n";
  const int q = model.qos_node();
  if (q < 0) return;
  const auto& qname = dag.nodes[static_cast<std::size_t>(q)].name;
  out << "direct causes of " << qname << ":";
  const auto parents = parents_of(dag, qname);
  if (parents.empty()) out << " (none)";
  for (const auto& p : parents) out << " " << p;
  out << "\n";
}

void print_scheme(std::ostream& out, const DiscretizationScheme& scheme) {
  out << "label,a,b,c\n";
  for (int i = 0; i < scheme.size(); ++i) {
    const auto& t = scheme.terms[static_cast<std::size_t>(i)];
    out << i << "," << io::format_real(t.a) << "," << io::format_real(t.b) << ","
        << io::format_real(t.c) << "\n";
  }
}

DiscretizationScheme scheme_for(const io::CsvTable& table, const std::string& variable,
                                const DiscretizerOptions& options, std::ostream& err) {
  SampleSeries series{variable, table.numeric_column(variable), ""};
  auto scheme = build_scheme_or_constant(series, options);
  if (scheme.degenerate)
    err << "warning: '" << variable << "' is constant; using a single-value scheme\n";
  return scheme;
}

// --- discretize ------------------------------------------------------------

struct DiscretizeCmd {
  std::string trace, variable, out_path, unit;
  DiscretizerFlags knobs;

  void attach(CLI::App* app) {
    app->add_option("--trace", trace, "Input trace CSV")->required();
    app->add_option("--variable", variable, "Column to discretize")->required();
    app->add_option("--unit", unit, "Unit label stored in the scheme");
    app->add_option("--out", out_path, "Scheme JSON output (stdout when omitted)");
    knobs.attach(app);
  }

  void run(std::ostream& out, std::ostream& err) const {
    const auto table = io::read_csv(trace);
    auto scheme = scheme_for(table, variable, knobs.build(), err);
    scheme.unit = unit;
    print_scheme(out, scheme);
    if (out_path.empty())
      out << io::dump(io::scheme_to_json(scheme));
    else
      io::write_json(out_path, io::scheme_to_json(scheme));
  }
};

// --- learn -----------------------------------------------------------------

struct LearnCmd {
  std::string trace, qos, tunable, columns, out_path;
  bool discrete = false;
  std::uint64_t seed = 0;
  DiscretizerFlags disc;
  LearnFlags learn;

  void attach(CLI::App* app) {
    app->add_option("--trace", trace, "Input trace CSV")->required();
    app->add_option("--qos", qos, "QoS column")->required();
    app->add_option("--tunable", tunable, "Comma-separated tunable columns");
    app->add_option("--columns", columns,
                    "Comma-separated columns to model (default: all but time_s, participant_id, strategy)");
    app->add_flag("--discrete", discrete, "Columns already hold integer labels");
    app->add_option("--seed", seed, "Accepted for uniformity; learning is deterministic");
    app->add_option("--out", out_path, "Model JSON output");
    disc.attach(app);
    learn.attach(app);
  }

  void run(std::ostream& out, std::ostream& err) const {
    const auto table = io::read_csv(trace);
    std::vector<std::string> names = split_list(columns);
    if (names.empty())
      for (const auto& h : table.header)
        if (h != "time_s" && h != "participant_id" && h != "strategy") names.push_back(h);
    if (std::find(names.begin(), names.end(), qos) == names.end()) {
      if (table.column_index(qos) < 0) throw MissingColumn("unknown variable '" + qos + "'");
      names.push_back(qos);
    }
    if (names.size() < 2) throw MissingColumn("learning needs the QoS column and at least one context");

    TraceDataset data;
    std::map<std::string, DiscretizationScheme> schemes;
    for (const auto& name : names) {
      if (discrete) {
        const auto values = table.numeric_column(name);
        std::vector<int> labels;
        int card = 1;
        for (double v : values) {
          if (v < 0.0 || v != static_cast<double>(static_cast<int>(v)))
            throw LabelOutOfRange("column '" + name + "' holds a non-label value");
          labels.push_back(static_cast<int>(v));
          card = std::max(card, labels.back() + 1);
        }
        data.add_column(name, card, std::move(labels));
      } else {
        auto scheme = scheme_for(table, name, disc.build(), err);
        SampleSeries series{name, table.numeric_column(name), ""};
        data.add_column(name, scheme.size(), discretize_series(scheme, series).labels);
        schemes.emplace(name, std::move(scheme));
      }
    }
    const auto knob_list = split_list(tunable);
    for (const auto& k : knob_list)
      data.index_of(k);
    auto model = learn_model(data, qos, std::set<std::string>(knob_list.begin(), knob_list.end()),
                             learn.build());
    model.schemes = std::move(schemes);
    print_structure(out, model);
    if (!out_path.empty()) io::write_json(out_path, io::model_to_json(model));
  }
};

// --- tune ------------------------------------------------------------------

struct TuneCmd {
  std::string model_path, qos, target, evidence, observe;
  double p_min = 0.5;

  void attach(CLI::App* app) {
    app->add_option("--model", model_path, "Model JSON")->required();
    app->add_option("--qos", qos, "QoS node (default: the model's QoS node)");
    app->add_option("--target", target, "Target QoS label, or 'best'")->required();
    app->add_option("--evidence", evidence, "Observed labels, name=label[,name=label...]");
    app->add_option("--observe", observe,
                    "Observed raw values discretized with the model's schemes, name=value[,...]");
    app->add_option("--p-min", p_min, "Probability threshold for --target best")
        ->check(CLI::Range(0.0, 1.0));
  }

  void run(std::ostream& out, std::ostream&) const {
    const auto model = io::model_from_json(io::read_json(model_path));
    std::string qos_name = qos;
    if (qos_name.empty()) {
      const int q = model.qos_node();
      if (q < 0) throw NotAQosNode("model has no QoS node; pass --qos");
      qos_name = model.dag.nodes[static_cast<std::size_t>(q)].name;
    }
    Evidence ev;
    for (const auto& item : split_list(evidence)) {
      auto [name, value] = split_assignment(item);
      model.dag.index_of(name);
      ev[name] = parse_int(value, "evidence '" + name + "'");
    }
    for (const auto& item : split_list(observe)) {
      auto [name, value] = split_assignment(item);
      model.dag.index_of(name);
      auto scheme = model.schemes.find(name);
      if (scheme == model.schemes.end())
        throw ConfigInvalid("model has no scheme for '" + name + "'; pass a label with --evidence");
      ev[name] = discretize_value(scheme->second, parse_real(value, "observation '" + name + "'"));
    }
    TuningRecommendation rec;
    if (target == "best") {
      rec = recommend_best(model, qos_name, preference_by_value(model, qos_name), ev, p_min);
    } else {
      rec = recommend(model, qos_name, parse_int(target, "--target"), ev);
    }
    out << io::dump(io::recommendation_to_json(model, rec));
  }
};

// --- train -----------------------------------------------------------------

struct TrainCmd {
  ScenarioFlags scenario;
  DiscretizerFlags disc;
  LearnFlags learn;
  int sessions = 4;
  int participants = 8;
  std::uint64_t seed = 1000;
  double p_min = 0.5;
  std::string out_path;

  void attach(CLI::App* app) {
    scenario.attach(app);
    disc.attach(app);
    learn.attach(app);
    app->add_option("--sessions", sessions, "Warm-up sessions")->check(CLI::Range(1, 1000));
    app->add_option("--participants", participants, "Participants per warm-up session")
        ->check(CLI::Range(1, 1000));
    app->add_option("--seed", seed, "Warm-up seed");
    app->add_option("--out", out_path, "Model JSON output")->required();
  }

  void run(std::ostream& out, std::ostream&) const {
    TrainingOptions t;
    t.sessions = sessions;
    t.participants = participants;
    t.seed = seed;
    t.discretizer = disc.build();
    t.learn = learn.build();
    const auto model = train_cabin(warmup_configs(scenario.build(), t), t.discretizer, t.learn);
    print_structure(out, model);
    io::write_json(out_path, io::model_to_json(model));
  }
};

// --- simulate --------------------------------------------------------------

struct SimulateCmd {
  ScenarioFlags scenario;
  std::string strategy, model_path, trace_path, report_path;
  std::optional<int> participants;
  std::optional<std::uint64_t> seed;
  std::optional<double> p_min;

  void attach(CLI::App* app) {
    scenario.attach(app);
    app->add_option("--strategy", strategy, "cabin, ton, don, explore or fixed");
    app->add_option("--participants", participants, "Participants")->check(CLI::Range(1, 1000));
    app->add_option("--seed", seed, "Session seed");
    app->add_option("--model", model_path, "Model JSON (required for cabin)");
    app->add_option("--p-min", p_min, "CABIN probability threshold")->check(CLI::Range(0.0, 1.0));
    app->add_option("--trace", trace_path, "Epoch trace CSV output");
    app->add_option("--report", report_path, "Session summary JSON output (stdout when omitted)");
  }

  void run(std::ostream& out, std::ostream&) const {
    ScenarioConfig cfg = scenario.build();
    if (!strategy.empty()) cfg.strategy = parse_strategy(strategy);
    if (participants) cfg.participants = *participants;
    if (seed) cfg.seed = *seed;
    if (p_min) cfg.cabin.p_min = *p_min;
    cfg.validate();

    std::optional<BayesianNetworkModel> model;
    if (cfg.strategy == Strategy::cabin) {
      if (model_path.empty())
        throw ConfigInvalid("the cabin strategy needs --model; run `cabin train --out model.json` first");
      model = io::model_from_json(io::read_json(model_path));
    }
    const auto report = run_session(cfg, model ? &*model : nullptr);
    if (!trace_path.empty()) io::write_file(trace_path, io::trace_csv(report));
    const auto summary = io::session_summary_to_json(report);
    if (report_path.empty())
      out << io::dump(summary);
    else
      io::write_json(report_path, summary);
  }
};

// --- compare ---------------------------------------------------------------

struct CompareCmd {
  ScenarioFlags scenario;
  DiscretizerFlags disc;
  LearnFlags learn;
  std::string participants = "4,8,12,16";
  std::string strategies = "cabin,ton,don";
  int reps = 5;
  std::uint64_t seed = 1;
  int jobs = 1;
  int train_sessions = 4;
  int train_participants = 8;
  std::optional<double> p_min;
  std::string model_path, out_path;

  void attach(CLI::App* app) {
    scenario.attach(app);
    disc.attach(app);
    learn.attach(app);
    app->add_option("--participants", participants, "Comma-separated participant counts");
    app->add_option("--strategies", strategies, "Comma-separated strategies");
    app->add_option("--reps", reps, "Repetitions per cell")->check(CLI::Range(1, 100000));
    app->add_option("--seed", seed, "Seed of the first repetition; rep r uses seed + r");
    app->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));
    app->add_option("--model", model_path, "CABIN model JSON (trained on the fly when omitted)");
    app->add_option("--train-sessions", train_sessions, "Warm-up sessions when training")
        ->check(CLI::Range(1, 1000));
    app->add_option("--train-participants", train_participants, "Participants per warm-up session")
        ->check(CLI::Range(1, 1000));
    app->add_option("--p-min", p_min, "CABIN probability threshold")->check(CLI::Range(0.0, 1.0));
    app->add_option("--out", out_path, "Report CSV output (stdout when omitted)");
  }

  void run(std::ostream& out, std::ostream& err) const {
    ComparisonOptions o;
    o.base = scenario.build();
    if (p_min) o.base.cabin.p_min = *p_min;
    o.participants.clear();
    for (const auto& p : split_list(participants)) {
      const int n = parse_int(p, "--participants");
      if (n < 1) throw ConfigInvalid("participant counts must be >= 1");
      o.participants.push_back(n);
    }
    o.strategies.clear();
    for (const auto& s : split_list(strategies)) o.strategies.push_back(parse_strategy(s));
    o.reps = reps;
    o.first_seed = seed;
    o.jobs = jobs;
    o.training.sessions = train_sessions;
    o.training.participants = train_participants;
    o.training.discretizer = disc.build();
    o.training.learn = learn.build();
    if (reps < 2) err << "warning: fewer than 2 reps; confidence intervals are left empty\n";

    std::optional<BayesianNetworkModel> model;
    if (!model_path.empty()) model = io::model_from_json(io::read_json(model_path));
    const auto report = run_comparison(o, model ? &*model : nullptr);
    const auto csv = io::comparison_csv(report);
    if (out_path.empty())
      out << csv;
    else
      io::write_file(out_path, csv);
  }
};

// Turns a JSON config object into option tokens placed before the user's
// own flags; with take-last semantics the flags win.
std::vector<std::string> config_tokens(const Json& j) {
  if (!j.is_object()) throw ConfigInvalid("config file must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      tokens.push_back(flag + "=" + (value.get<bool>() ? "true" : "false"));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ",";
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag);
      tokens.push_back(value.dump());
    } else {
      throw ConfigInvalid("config field '" + key + "' must be a scalar or a list");
    }
  }
  return tokens;
}

int exit_code(const Error& e) { return static_cast<int>(e.category()); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CABIN: context-aware QoS tuning and conferencing simulation", "cabin"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "cabin 0.1.0");

  DiscretizeCmd discretize;
  LearnCmd learn;
  TuneCmd tune;
  TrainCmd train;
  SimulateCmd simulate;
  CompareCmd compare;
  std::string config_path;

  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON file of option values; flags override it");
    cmd.attach(sub);
    commands.emplace_back(sub, [&cmd, &out, &err] { cmd.run(out, err); });
  };
  add("discretize", "Fit a discretization scheme to one trace column", discretize);
  add("learn", "Learn a Bayesian network from a trace", learn);
  add("tune", "Recommend tunable contexts for a QoS target", tune);
  add("train", "Train a CABIN model from rate-exploring warm-up sessions", train);
  add("simulate", "Run one conferencing session", simulate);
  add("compare", "Run the strategy comparison grid", compare);

  // Config values go right after the subcommand name.
  std::vector<std::string> argv = args;
  for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
    if (argv[i] != "--config" && argv[i].rfind("--config=", 0) != 0) continue;
    const std::string path = argv[i] == "--config" ? argv[i + 1] : argv[i].substr(9);
    try {
      auto tokens = config_tokens(io::read_json(path));
      argv.insert(argv.begin() + 1, tokens.begin(), tokens.end());
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return exit_code(e);
    }
    break;
  }

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    for (auto& [sub, fn] : commands)
      if (sub->parsed()) fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace cabin::cli
