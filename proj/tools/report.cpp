#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "wavenl/error.hpp"

namespace wavenl::cli {

namespace fs = std::filesystem;

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

double cell(const json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

json Table::to_json(const char* provenance) const {
  json rj = json::array();
  for (const auto& r : rows) rj.push_back(r);
  return {{"columns", columns}, {"rows", rj}, {"provenance", provenance}};
}

Table Table::from_json(const json& j) {
  Table t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<double> row;
    for (const auto& v : r) row.push_back(cell(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const Table& table, const fs::path& path) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const auto& r : table.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << num17(r[c]);
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) return t;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) t.columns.push_back(c);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) row.push_back(std::strtod(c.c_str(), nullptr));
    if (row.size() != t.columns.size())
      throw Error(ErrorKind::io, "ragged CSV row in " + path.string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

json tagged(const json& value, const char* provenance) {
  return {{"value", value}, {"provenance", provenance}};
}

std::string render_svg(const json& chart, const Table& table) {
  const bool loglog = chart.value("kind", "line") == "loglog";
  const std::string xname = chart.at("x").get<std::string>();
  const auto ynames = chart.at("y").get<std::vector<std::string>>();
  auto col = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end()) throw Error(ErrorKind::config, "chart column '" + name + "' missing");
    return it - table.columns.begin();
  };
  auto tr = [&](double v) { return loglog ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!loglog || v > 0.0); };

  const double W = 640, H = 400, L = 70, R = 160, Tm = 40, B = 50;
  const auto xc = col(xname);
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& yn : ynames) {
    const auto yc = col(yn);
    for (const auto& r : table.rows) {
      if (!usable(r[xc]) || !usable(r[yc])) continue;
      x0 = std::min(x0, tr(r[xc]));
      x1 = std::max(x1, tr(r[xc]));
      y0 = std::min(y0, tr(r[yc]));
      y1 = std::max(y1, tr(r[yc]));
    }
  }
  const bool empty = !(x0 <= x1);
  if (empty) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tr(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (tr(v) - y0) / (y1 - y0) * (H - Tm - B); };
  auto untr = [&](double v) { return loglog ? std::pow(10.0, v) : v; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L << "\" y=\"20\" font-size=\"13\">" << chart.value("title", chart.value("name", ""))
    << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << L << "\" y=\"" << H - B + 15 << "\">" << num4(untr(x0)) << "</text>\n";
  s << "<text x=\"" << W - R << "\" y=\"" << H - B + 15 << "\" text-anchor=\"end\">" << num4(untr(x1))
    << "</text>\n";
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xname
    << (loglog ? " (log)" : "") << "</text>\n";
  s << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << num4(untr(y0))
    << "</text>\n";
  s << "<text x=\"" << L - 5 << "\" y=\"" << Tm + 10 << "\" text-anchor=\"end\">" << num4(untr(y1))
    << "</text>\n";
  for (std::size_t k = 0; k < ynames.size(); ++k) {
    const auto yc = col(ynames[k]);
    const char* c = colors[k % 6];
    std::ostringstream pts;
    s << "<g class=\"series\" data-name=\"" << ynames[k] << "\">\n";
    for (const auto& r : table.rows) {
      if (!usable(r[xc]) || !usable(r[yc])) continue;
      pts << px(r[xc]) << "," << py(r[yc]) << " ";
      s << "<circle cx=\"" << px(r[xc]) << "\" cy=\"" << py(r[yc]) << "\" r=\"3\" fill=\"" << c
        << "\" data-x=\"" << num17(r[xc]) << "\" data-y=\"" << num17(r[yc]) << "\"/>\n";
    }
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts.str() << "\"/>\n</g>\n";
    s << "<text x=\"" << W - R + 10 << "\" y=\"" << Tm + 15 * (k + 1) << "\" fill=\"" << c << "\">"
      << ynames[k] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void emit_report(const json& report, ReportFormat format, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create output directory " + dir.string());
  const json tables = report.value("tables", json::object());
  switch (format) {
    case ReportFormat::json: {
      auto out = open_out(dir / "report.json");
      out << report.dump(2) << "\n";
      if (!out) throw Error(ErrorKind::io, "write failed for report.json");
      break;
    }
    case ReportFormat::csv:
      for (const auto& [name, t] : tables.items()) write_csv(Table::from_json(t), dir / (name + ".csv"));
      break;
    case ReportFormat::svg:
      for (const auto& chart : report.value("charts", json::array())) {
        const std::string tname = chart.at("table").get<std::string>();
        if (!tables.contains(tname)) throw Error(ErrorKind::config, "chart references missing table " + tname);
        auto out = open_out(dir / (chart.at("name").get<std::string>() + ".svg"));
        out << render_svg(chart, Table::from_json(tables.at(tname)));
      }
      break;
  }
}

void emit_all(const json& report, const fs::path& dir) {
  for (auto f : {ReportFormat::json, ReportFormat::csv, ReportFormat::svg}) emit_report(report, f, dir);
}

}  // namespace wavenl::cli
