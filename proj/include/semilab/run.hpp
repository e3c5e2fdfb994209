#pragma once

// Config-driven entry point shared by the C API and the CLI: one declarative
// JSON document in, a JSON report plus named CSV tables out.

#include <string>
#include <vector>

namespace semilab {

struct CsvTable {
  std::string name;
  std::string csv;  // header line first
};

enum class RunStatus : int { success = 0, error = 1, inconclusive = 2 };

struct RunResult {
  std::string json;  // report; the "timing" member is the only nondeterministic part
  std::vector<CsvTable> tables;
  std::string verdict;
  RunStatus status = RunStatus::success;
};

// Commands: solve, capacity, orlicz-norm, admissibility, experiment. The
// experiment kind is read from the config's "kind" member. Throws Error with
// ErrorCode::config on malformed configs.
RunResult run_command(const std::string& command, const std::string& config_json);

// experiment with an explicit kind; a "kind" member in the config must agree.
RunResult run_experiment_kind(const std::string& kind, const std::string& config_json);

// The report with its "timing" member removed, for rerun comparisons.
std::string strip_timing(const std::string& report_json);

}  // namespace semilab
