// Command-line front end over the C API.

#include "semilab/semilab.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

int kExitError = 1;
int kExitInconclusive = 2;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_file(const fs::path& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

struct Common {
  std::string config;
  std::string out_dir;
  bool stable = false;
  bool quiet = false;
};

int emit(slab_status s, slab_report* rep, const Common& c) {
  if (s != SLAB_OK) {
    std::cerr << "error (" << slab_status_name(s) << "): " << slab_last_error() << '\n';
    return kExitError;
  }
  const char* json = c.stable ? slab_report_json_stable(rep) : slab_report_json(rep);
  int code = slab_report_outcome(rep) == SLAB_OUTCOME_INCONCLUSIVE ? kExitInconclusive : 0;
  if (!c.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    bool ok = !ec && write_file(fs::path(c.out_dir) / "report.json", json);
    for (size_t i = 0; ok && i < slab_report_field_count(rep); ++i)
      ok = write_file(fs::path(c.out_dir) / (std::string(slab_report_field_name(rep, i)) + ".csv"),
                      slab_report_field_csv(rep, i));
    if (!ok) {
      std::cerr << "error (io): cannot write to " << c.out_dir << '\n';
      code = kExitError;
    } else if (!c.quiet) {
      std::cout << "verdict: " << slab_report_verdict(rep) << '\n' << "report: " << (fs::path(c.out_dir) / "report.json").string() << '\n';
    }
  } else if (!c.quiet) {
    std::cout << json << '\n';
  }
  slab_report_destroy(rep);
  return code;
}

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("-c,--config", c.config, "JSON config file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  app->add_option("-o,--out", c.out_dir, "directory for report.json and CSV tables (default: JSON to stdout)");
  app->add_flag("--stable", c.stable, "omit the timing member from the report");
  app->add_flag("-q,--quiet", c.quiet, "no console output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semilab: semilinear boundary problems with measure data, Orlicz norms and capacities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(slab_version()));

  Common common;
  std::string kind;
  for (const char* name : {"solve", "capacity", "orlicz-norm", "admissibility"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " command from a config");
    add_common(sub, common, true);
  }
  auto* exp = app.add_subcommand("experiment", "run a scenario driver");
  exp->add_option("kind", kind,
                  "dirac_threshold | removability_interior | removability_boundary | admissibility_sweep | "
                  "capacity_shrink | duality_gap")
      ->required();
  add_common(exp, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  std::string config = "{}";
  if (!common.config.empty() && !read_file(common.config, config)) {
    std::cerr << "error (io): cannot read " << common.config << '\n';
    return kExitError;
  }

  slab_report* rep = nullptr;
  slab_status s;
  const auto* chosen = app.get_subcommands().front();
  if (chosen == exp)
    s = slab_run_experiment(kind.c_str(), config.c_str(), &rep);
  else
    s = slab_run(chosen->get_name().c_str(), config.c_str(), &rep);
  return emit(s, rep, common);
}
