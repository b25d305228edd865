#pragma once

#include <string>
#include <vector>

#include "mdpm/evolution.hpp"

namespace mdpm {

// Per-run figures written to summary.json.
struct RunSummary {
  std::string config;
  int steps = 0;
  double dt = 0.0;
  double nu = 1.0;
  double weighted_norm = 0.0;
  double weighted_forcing_norm = 0.0;
  std::optional<double> bound_ratio;
  std::vector<int> newton_iterations;
  int fallback_steps = 0;
  bool rate_cap_warning = false;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  double max_mass_drift = 0.0;
  double final_energy = 0.0;
  double wall_seconds = 0.0;
};

std::string summary_json(const RunSummary& s);
void write_summary(const RunSummary& s, const std::string& path);

// v, p, s, q and u of one step as <dir>/<field>_<step>.csv.
void write_state_csv(const PoroState& state, const std::string& dir, int step);
MdFunction read_function_csv(SpacePtr space, const std::string& path);

// Legacy ASCII VTK: grid vertices, bulk triangles and fracture segments.  Point data is the
// displacement averaged over the vertex copies; cell data the pressure.
std::string vtk_snapshot(const MdMesh& mesh, const MdFunction& u, const MdFunction& p, double t);
void write_vtk(const MdMesh& mesh, const MdFunction& u, const MdFunction& p, double t, const std::string& path);

std::string step_file(const std::string& dir, const std::string& field, int step, const std::string& ext);

}  // namespace mdpm
