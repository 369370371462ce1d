#include "cabin/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cabin/errors.hpp"

namespace cabin::io {

std::string format_real(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

// ---------------------------------------------------------------------------
// Schemes and models

Json scheme_to_json(const DiscretizationScheme& scheme) {
  Json j;
  j["variable"] = scheme.variable;
  j["unit"] = scheme.unit;
  Json terms = Json::array();
  for (const auto& t : scheme.terms) terms.push_back({{"a", t.a}, {"b", t.b}, {"c", t.c}});
  j["terms"] = std::move(terms);
  j["epsilon"] = scheme.epsilon;
  j["k_max"] = scheme.k_max;
  if (scheme.degenerate) j["degenerate"] = true;
  return j;
}

namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

DiscretizationScheme scheme_from_json(const Json& j) {
  DiscretizationScheme s;
  s.variable = get<std::string>(j, "variable");
  s.unit = get<std::string>(j, "unit");
  for (const auto& t : get<Json>(j, "terms")) {
    GaussianTerm term{get<double>(t, "a"), get<double>(t, "b"), get<double>(t, "c")};
    if (!(term.a > 0.0) || !(term.c > 0.0))
      throw FormatError("scheme '" + s.variable + "' has a non-positive amplitude or width");
    s.terms.push_back(term);
  }
  if (s.terms.empty()) throw FormatError("scheme '" + s.variable + "' has no terms");
  s.epsilon = get<double>(j, "epsilon");
  s.k_max = get<int>(j, "k_max");
  s.degenerate = j.contains("degenerate") && j.at("degenerate").get<bool>();
  s.normalized = true;
  return s;
}

Json model_to_json(const BayesianNetworkModel& model) {
  const auto& dag = model.dag;
  auto name = [&](int i) { return dag.nodes[static_cast<std::size_t>(i)].name; };

  Json j;
  Json nodes = Json::array();
  for (const auto& n : dag.nodes)
    nodes.push_back({{"name", n.name},
                     {"cardinality", n.cardinality},
                     {"role", n.role == NodeRole::qos_metric ? "qos_metric" : "context"},
                     {"tunable", n.tunable}});
  j["nodes"] = std::move(nodes);

  Json ordering = Json::array();
  for (int i : dag.ordering) ordering.push_back(name(i));
  j["ordering"] = std::move(ordering);

  Json edges = Json::array();
  for (auto [p, c] : dag.edges()) edges.push_back({name(p), name(c)});
  j["edges"] = std::move(edges);

  Json cpts = Json::object();
  for (const auto& cpt : model.cpts) {
    Json parents = Json::array();
    for (int p : cpt.parents) parents.push_back(name(p));
    Json rows = Json::array();
    for (std::size_t r = 0; r < cpt.rows(); ++r) {
      Json row = Json::array();
      for (int v = 0; v < cpt.cardinality; ++v) row.push_back(cpt.at(r, v));
      rows.push_back(std::move(row));
    }
    cpts[name(cpt.node)] = {{"parents", std::move(parents)}, {"rows", std::move(rows)}};
  }
  j["cpts"] = std::move(cpts);

  Json schemes = Json::object();
  for (const auto& [var, scheme] : model.schemes) schemes[var] = scheme_to_json(scheme);
  j["schemes"] = std::move(schemes);
  return j;
}

BayesianNetworkModel model_from_json(const Json& j) {
  BayesianNetworkModel model;
  auto& dag = model.dag;
  for (const auto& n : get<Json>(j, "nodes")) {
    NodeSpec spec;
    spec.name = get<std::string>(n, "name");
    spec.cardinality = get<int>(n, "cardinality");
    const auto role = get<std::string>(n, "role");
    if (role == "qos_metric")
      spec.role = NodeRole::qos_metric;
    else if (role == "context")
      spec.role = NodeRole::context;
    else
      throw FormatError("unknown node role '" + role + "'");
    spec.tunable = get<bool>(n, "tunable");
    dag.nodes.push_back(std::move(spec));
  }
  dag.parents.assign(dag.nodes.size(), {});

  auto index = [&](const std::string& name) {
    try {
      return dag.index_of(name);
    } catch (const UnknownNode&) {
      throw FormatError("model references unknown node '" + name + "'");
    }
  };

  for (const auto& name : get<Json>(j, "ordering")) dag.ordering.push_back(index(name.get<std::string>()));

  const Json cpts = get<Json>(j, "cpts");
  model.cpts.resize(dag.nodes.size());
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto& spec = dag.nodes[i];
    if (!cpts.contains(spec.name)) throw FormatError("missing CPT for '" + spec.name + "'");
    const Json& cj = cpts.at(spec.name);
    Cpt cpt;
    cpt.node = static_cast<int>(i);
    cpt.cardinality = spec.cardinality;
    for (const auto& p : get<Json>(cj, "parents")) {
      const int pi = index(p.get<std::string>());
      cpt.parents.push_back(pi);
      cpt.parent_cardinality.push_back(dag.nodes[static_cast<std::size_t>(pi)].cardinality);
    }
    for (const auto& row : get<Json>(cj, "rows")) {
      if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.cardinality))
        throw FormatError("CPT row of '" + spec.name + "' has the wrong length");
      for (const auto& v : row) cpt.table.push_back(v.get<double>());
    }
    dag.parents[i] = cpt.parents;
    model.cpts[i] = std::move(cpt);
  }

  std::set<std::pair<int, int>> declared;
  for (const auto& e : get<Json>(j, "edges")) {
    if (!e.is_array() || e.size() != 2) throw FormatError("edges must be [parent, child] pairs");
    declared.emplace(index(e[0].get<std::string>()), index(e[1].get<std::string>()));
  }
  const auto derived = dag.edges();
  if (std::set<std::pair<int, int>>(derived.begin(), derived.end()) != declared)
    throw FormatError("edge list disagrees with CPT parents");

  const auto schemes = get<Json>(j, "schemes");
  for (const auto& [var, sj] : schemes.items())
    model.schemes.emplace(var, scheme_from_json(sj));

  try {
    model.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  return model;
}

Json recommendation_to_json(const BayesianNetworkModel& model, const TuningRecommendation& rec) {
  auto value_of = [&](const std::string& node, int label) -> Json {
    auto it = model.schemes.find(node);
    if (it == model.schemes.end() || label < 0 || label >= it->second.size()) return nullptr;
    return round12(label_to_value(it->second, label));
  };
  Json j;
  j["qos_node"] = rec.qos_node;
  j["target_label"] = rec.target_label;
  j["target_value"] = value_of(rec.qos_node, rec.target_label);
  Json assignment = Json::object();
  for (const auto& [name, label] : rec.assignment)
    assignment[name] = {{"label", label}, {"value", value_of(name, label)}};
  j["assignment"] = std::move(assignment);
  j["probability"] = round12(rec.probability);
  return j;
}

// ---------------------------------------------------------------------------
// Scenario configuration

Json scenario_to_json(const ScenarioConfig& c) {
  Json j;
  j["participants"] = c.participants;
  j["duration_s"] = c.duration_s;
  j["tick_s"] = c.tick_s;
  j["epoch_s"] = c.epoch_s;
  j["seed"] = c.seed;
  j["strategy"] = to_string(c.strategy);
  j["base_capacity_kbps"] = c.base_capacity_kbps;
  j["bw_noise_frac"] = c.bw_noise_frac;
  j["rate_bounds_kbps"] = {c.min_rate_kbps, c.max_rate_kbps};
  j["frame_rate_fps"] = c.frame_rate_fps;
  j["startup_delay_s"] = c.startup_delay_s;
  j["initial_rate_kbps"] = c.initial_rate_kbps;
  j["fixed_rate_kbps"] = c.fixed_rate_kbps;
  j["background_traffic"] = c.background_traffic;
  Json schedule = Json::array();
  for (const auto& s : c.capacity_schedule) schedule.push_back({s.from_s, s.capacity_kbps});
  j["capacity_schedule"] = std::move(schedule);
  j["rebuffer_target_ms"] = c.rebuffer_target_ms;
  j["rtt_base_ms"] = c.rtt_base_ms;
  j["rtt_queue_ms"] = c.rtt_queue_ms;
  j["video_packet_bytes"] = c.video_packet_bytes;
  j["psnr"] = {{"beta0_db", c.psnr.beta0_db},     {"beta1_db", c.psnr.beta1_db},
               {"reference_kbps", c.psnr.reference_kbps}, {"min_db", c.psnr.min_db},
               {"max_db", c.psnr.max_db},         {"conceal_drop_db", c.psnr.conceal_drop_db},
               {"floor_db", c.psnr.floor_db}};
  j["don"] = {{"target_ms", c.don.target_ms}, {"low_ms", c.don.low_ms}, {"gain", c.don.gain}};
  j["cabin"] = {{"qos_node", c.cabin.qos_node},
                {"rate_node", c.cabin.rate_node},
                {"evidence_nodes", c.cabin.evidence_nodes},
                {"p_min", c.cabin.p_min}};
  return j;
}

namespace {

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigInvalid(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigInvalid(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigInvalid("unknown config field '" + where + key + "'");
}

}  // namespace

void scenario_from_json(const Json& j, ScenarioConfig& c) {
  reject_unknown(j,
                 {"participants", "duration_s", "tick_s", "epoch_s", "seed", "strategy",
                  "base_capacity_kbps", "bw_noise_frac", "rate_bounds_kbps", "frame_rate_fps",
                  "startup_delay_s", "initial_rate_kbps", "fixed_rate_kbps", "background_traffic",
                  "capacity_schedule", "rebuffer_target_ms", "rtt_base_ms", "rtt_queue_ms",
                  "video_packet_bytes", "psnr", "don", "cabin"},
                 "");
  take(j, "participants", c.participants);
  take(j, "duration_s", c.duration_s);
  take(j, "tick_s", c.tick_s);
  take(j, "epoch_s", c.epoch_s);
  take(j, "seed", c.seed);
  if (j.contains("strategy")) {
    std::string s;
    take(j, "strategy", s);
    c.strategy = parse_strategy(s);
  }
  take(j, "base_capacity_kbps", c.base_capacity_kbps);
  take(j, "bw_noise_frac", c.bw_noise_frac);
  if (j.contains("rate_bounds_kbps")) {
    std::vector<double> bounds;
    take(j, "rate_bounds_kbps", bounds);
    if (bounds.size() != 2) throw ConfigInvalid("rate_bounds_kbps must be [min, max]");
    c.min_rate_kbps = bounds[0];
    c.max_rate_kbps = bounds[1];
  }
  take(j, "frame_rate_fps", c.frame_rate_fps);
  take(j, "startup_delay_s", c.startup_delay_s);
  take(j, "initial_rate_kbps", c.initial_rate_kbps);
  take(j, "fixed_rate_kbps", c.fixed_rate_kbps);
  take(j, "background_traffic", c.background_traffic);
  if (j.contains("capacity_schedule")) {
    std::vector<std::vector<double>> steps;
    take(j, "capacity_schedule", steps);
    c.capacity_schedule.clear();
    for (const auto& s : steps) {
      if (s.size() != 2) throw ConfigInvalid("capacity_schedule entries must be [from_s, kbps]");
      c.capacity_schedule.push_back({s[0], s[1]});
    }
  }
  take(j, "rebuffer_target_ms", c.rebuffer_target_ms);
  take(j, "rtt_base_ms", c.rtt_base_ms);
  take(j, "rtt_queue_ms", c.rtt_queue_ms);
  take(j, "video_packet_bytes", c.video_packet_bytes);
  if (j.contains("psnr")) {
    const Json& p = j.at("psnr");
    reject_unknown(p, {"beta0_db", "beta1_db", "reference_kbps", "min_db", "max_db",
                       "conceal_drop_db", "floor_db"},
                   "psnr.");
    take(p, "beta0_db", c.psnr.beta0_db);
    take(p, "beta1_db", c.psnr.beta1_db);
    take(p, "reference_kbps", c.psnr.reference_kbps);
    take(p, "min_db", c.psnr.min_db);
    take(p, "max_db", c.psnr.max_db);
    take(p, "conceal_drop_db", c.psnr.conceal_drop_db);
    take(p, "floor_db", c.psnr.floor_db);
  }
  if (j.contains("don")) {
    const Json& d = j.at("don");
    reject_unknown(d, {"target_ms", "low_ms", "gain"}, "don.");
    take(d, "target_ms", c.don.target_ms);
    take(d, "low_ms", c.don.low_ms);
    take(d, "gain", c.don.gain);
  }
  if (j.contains("cabin")) {
    const Json& p = j.at("cabin");
    reject_unknown(p, {"qos_node", "rate_node", "evidence_nodes", "p_min"}, "cabin.");
    take(p, "qos_node", c.cabin.qos_node);
    take(p, "rate_node", c.cabin.rate_node);
    take(p, "evidence_nodes", c.cabin.evidence_nodes);
    take(p, "p_min", c.cabin.p_min);
  }
}

Json session_summary_to_json(const SessionReport& r) {
  Json j;
  j["config"] = scenario_to_json(r.config);
  j["epochs"] = r.config.participants > 0 ? r.epochs.size() / static_cast<std::size_t>(r.config.participants) : 0;
  std::size_t slots = 0;
  for (const auto& e : r.epochs)
    if (e.participant == 0) slots += e.frame_psnrs.size();
  j["frame_slots_per_participant"] = slots;
  j["mean_psnr_db"] = round12(r.mean_psnr_db);
  j["mean_playback_delay_ms"] = round12(r.mean_playback_delay_ms);
  j["mean_throughput_kbps"] = round12(r.mean_throughput_kbps);
  j["starvations"] = r.starvations;
  j["flagged_epochs"] = r.flagged_epochs;
  j["min_buffer_ms"] = round12(r.min_buffer_ms);
  return j;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

Json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_json(const std::string& path, const Json& j) { write_file(path, dump(j)); }

// ---------------------------------------------------------------------------
// CSV

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw MissingColumn("unknown variable '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string& cell = rows[r][static_cast<std::size_t>(idx)];
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
      throw FormatError("column '" + name + "', row " + std::to_string(r + 1) +
                        ": not a number: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r' && ch != ' ' && ch != '\t') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw FormatError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw FormatError("empty CSV");
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "time_s",    "participant_id", "strategy", "video_rate_kbps", "avail_bw_kbps",
      "est_bw_kbps", "buffer_ms",    "loss_frac", "rtt_ms",         "frame_psnr_db"};
  return cols;
}

std::string trace_csv(const SessionReport& report) {
  std::string out;
  for (std::size_t i = 0; i < trace_columns().size(); ++i)
    out += (i ? "," : "") + trace_columns()[i];
  out += "\n";
  for (const auto& e : report.epochs) {
    out += format_real(e.time_s) + "," + std::to_string(e.participant) + "," +
           to_string(e.strategy) + "," + format_real(e.video_rate_kbps) + "," +
           format_real(e.avail_bw_kbps) + "," + format_real(e.est_bw_kbps) + "," +
           format_real(e.buffer_ms) + "," + format_real(e.loss_frac) + "," +
           format_real(e.rtt_ms) + "," + format_real(e.frame_psnr_db) + "\n";
  }
  return out;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"participants", "strategy", "metric", "mean",
                                                "ci95_lo",      "ci95_hi",  "reps"};
  return cols;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report_columns().size(); ++i)
    out += (i ? "," : "") + report_columns()[i];
  out += "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& row : report.rows) {
    const std::pair<const char*, const MetricSummary*> metrics[] = {
        {"psnr_db", &row.psnr_db},
        {"playback_delay_ms", &row.playback_delay_ms},
        {"throughput_kbps", &row.throughput_kbps}};
    for (const auto& [name, m] : metrics)
      out += std::to_string(row.participants) + "," + to_string(row.strategy) + "," + name + "," +
             format_real(m->mean) + "," + opt(m->ci95_lo) + "," + opt(m->ci95_hi) + "," +
             std::to_string(row.reps) + "\n";
  }
  return out;
}

}  // namespace cabin::io
