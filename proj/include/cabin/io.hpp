#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cabin/bayesnet.hpp"
#include "cabin/discretizer.hpp"
#include "cabin/simulator.hpp"
#include "cabin/tuner.hpp"

namespace cabin::io {

using Json = nlohmann::ordered_json;

/// Fixed-precision text for reports and CSV cells (12 significant digits).
std::string format_real(double x);
/// x rounded to 12 significant digits, for JSON reports.
double round12(double x);

// Model files keep full round-trip precision so load(save(m)) == m.
Json scheme_to_json(const DiscretizationScheme& scheme);
DiscretizationScheme scheme_from_json(const Json& j);

Json model_to_json(const BayesianNetworkModel& model);
BayesianNetworkModel model_from_json(const Json& j);

Json recommendation_to_json(const BayesianNetworkModel& model, const TuningRecommendation& rec);

Json scenario_to_json(const ScenarioConfig& cfg);
/// Keys absent from `j` keep the values already in `cfg`. Unknown keys throw.
void scenario_from_json(const Json& j, ScenarioConfig& cfg);

Json session_summary_to_json(const SessionReport& report);

std::string read_file(const std::string& path);     // throws IoError
void write_file(const std::string& path, const std::string& text);
Json read_json(const std::string& path);            // throws IoError, FormatError
void write_json(const std::string& path, const Json& j);
std::string dump(const Json& j);                    // two-space indent, trailing newline

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
  /// Throws MissingColumn ("unknown variable") or FormatError.
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);  // throws FormatError
CsvTable read_csv(const std::string& path);

const std::vector<std::string>& trace_columns();
std::string trace_csv(const SessionReport& report);

const std::vector<std::string>& report_columns();
std::string comparison_csv(const ComparisonReport& report);

}  // namespace cabin::io
