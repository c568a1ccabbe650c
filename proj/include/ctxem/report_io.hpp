#pragma once

#include "ctxem/harness.hpp"
#include "ctxem/information.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ctxem {

// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

// Minimal CSV line writer: LF endings, cells quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

void write_rows_csv(std::ostream& os, const std::vector<MetricRow>& rows);
void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& agg);
void write_significance_csv(std::ostream& os, const std::vector<SignificanceRow>& sig);

nlohmann::json report_to_json(const ScenarioReport& rep);
nlohmann::json info_to_json(const InfoMatrices& info);

// "out.csv" -> "out.agg.csv"; other names get the suffix appended.
std::string sibling_path(const std::string& path, const std::string& tag);

enum class OutputFormat { Csv, Json };

// CSV writes the row table plus .agg.csv and .sig.csv siblings; JSON writes one document.
void write_scenario_report(const ScenarioReport& rep, const std::string& path, OutputFormat fmt);

}  // namespace ctxem
