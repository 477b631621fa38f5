#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

using namespace wavenl;
using namespace wavenl::cli;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> formats;
};

int fail(const Error& e, const std::string& out_dir) {
  const json j = error_json(e);
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream f(std::filesystem::path(out_dir) / "error.json");
    if (f) f << j.dump(2) << "\n";
  }
  return exit_code(e.kind());
}

int run_pipeline(Pipeline p, const Options& o) {
  std::string out = o.out;
  try {
    ExperimentConfig cfg = load_config(o.config, p);
    if (o.seed) {
      cfg.seed = *o.seed;
      cfg.raw["seed"] = *o.seed;
    }
    if (o.threads) cfg.threads = std::max(1, *o.threads);
    if (out.empty()) out = cfg.output.string();
    const json report = run_experiment(cfg);
    emit_all(report, out);
    std::cout << out << "/report.json\n";
    return 0;
  } catch (const Error& e) {
    return fail(e, out);
  }
}

int run_report(const Options& o) {
  try {
    std::ifstream in(o.config);
    if (!in) throw Error(ErrorKind::io, "cannot read report " + o.config);
    json report;
    try {
      report = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::config, std::string("report is not valid JSON: ") + e.what());
    }
    const std::string out = o.out.empty() ? std::string("out") : o.out;
    for (const std::string& f : o.formats) {
      if (f == "json") emit_report(report, ReportFormat::json, out);
      else if (f == "csv") emit_report(report, ReportFormat::csv, out);
      else if (f == "svg") emit_report(report, ReportFormat::svg, out);
      else throw Error(ErrorKind::config, "unknown format '" + f + "'");
    }
    return 0;
  } catch (const Error& e) {
    return fail(e, "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semilinear wave inverse-problem experiments"};
  app.require_subcommand(1);
  Options o;
  o.formats = {"csv", "svg"};
  const std::pair<const char*, Pipeline> pipelines[] = {
      {"forward", Pipeline::forward},
      {"frechet-check", Pipeline::frechet_check},
      {"probe-certify", Pipeline::probe_certify},
      {"recover-boundary", Pipeline::recover_boundary},
      {"recover-nonlinearity", Pipeline::recover_nonlinearity},
      {"recover-initial", Pipeline::recover_initial},
  };
  std::optional<Pipeline> chosen;
  for (const auto& [name, p] : pipelines) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", o.config, "experiment config (JSON)")->required();
    sub->add_option("--out", o.out, "output directory (default: config 'output' or ./out)");
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->callback([&chosen, p = p] { chosen = p; });
  }
  CLI::App* rep = app.add_subcommand("report", "re-emit CSV/SVG files from a report.json");
  rep->add_option("--config", o.config, "report.json to render")->required();
  rep->add_option("--out", o.out, "output directory");
  rep->add_option("--format", o.formats, "json, csv and/or svg")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (chosen) return run_pipeline(*chosen, o);
  return run_report(o);
}
