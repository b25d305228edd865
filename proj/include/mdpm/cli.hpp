#pragma once

#include <string>
#include <vector>

#include "mdpm/output.hpp"

namespace mdpm {

enum ExitCode { exit_pass = 0, exit_failure = 1, exit_usage = 2, exit_fault = 3 };

struct RunOptions {
  std::string config_path;
  std::string output_dir;  // empty: the directory named in the config
  int vtk_every = -1;      // < 0: the value from the config
};

// Simulates a config, writing per-step CSVs, VTK snapshots and summary.json.  Outputs of the
// steps already taken are flushed before a step fault propagates.
RunSummary run_simulation(const RunOptions& opt);

// Converts the CSV output of a run into legacy VTK snapshots; returns the files written.
std::vector<std::string> export_vtk(const std::string& run_dir, int every = 1);
// Writes the assembled operators of a config as Matrix Market files.
std::vector<std::string> export_matrices(const std::string& config_path, const std::string& dir);

int run_cli(int argc, const char* const* argv);

}  // namespace mdpm
