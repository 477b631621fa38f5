#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace wavenl::cli {

using json = nlohmann::json;

// Numeric table; the in-report form is {"columns": [...], "rows": [[...]]}.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  json to_json(const char* provenance = "computed") const;
  static Table from_json(const json& j);
};

// Values are written with 17 significant digits so a reload is bit-exact.
void write_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

enum class ReportFormat { json, csv, svg };

// Report layout:
//   results: {name: {"value": v, "provenance": tag}}
//   tables:  {name: Table json}
//   charts:  [{"name", "kind": "loglog" | "line", "table", "x", "y": [...], "title"}]
// CSV files are named after tables, SVG files after charts. Charts read their
// points from the tables in the report.
void emit_report(const json& report, ReportFormat format, const std::filesystem::path& dir);
void emit_all(const json& report, const std::filesystem::path& dir);

// Tagged scalar {"value": v, "provenance": tag}.
json tagged(const json& value, const char* provenance = "computed");

std::string render_svg(const json& chart, const Table& table);

}  // namespace wavenl::cli
