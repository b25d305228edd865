#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdpm/evolution.hpp"
#include "mdpm/strain.hpp"

namespace mdpm {

// One-dimensional consolidation of a column of height H drained at the top, loaded by a step
// pressure `load`.  kappa1 is the flow resistance, so the permeability is 1 / kappa1.
struct TerzaghiParams {
  double height = 1.0;
  double load = 1.0;
  double mu = 1.0, lambda = 1.0;
  double alpha = 1.0, beta = 1.0;
  double kappa1 = 1.0;
  int terms = 200;

  double consolidation_coefficient() const;
  double initial_pressure() const;
  double dimensionless_time(double t) const;
};

// Pressure at height z above the impermeable base.  Throws Error for t < 0.
double terzaghi_reference(const TerzaghiParams& params, double z, double t);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string name;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool pass() const;
  std::string table() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240531;
  double tol_scale = 1.0;
};

SuiteReport operator_suite(const VerifyOptions& opt = {});
SuiteReport relation_suite(const VerifyOptions& opt = {});
SuiteReport strain_suite(const VerifyOptions& opt = {});
SuiteReport reduction_suite(const VerifyOptions& opt = {});

// Shared scenario builders used by the suites and the acceptance checks.
std::shared_ptr<const OperatorSet> scenario_operators(const std::string& geometry, double h,
                                                      const BoundaryConditions& bc = {});
// Named displacement fields: a smooth stretch, an opening shear across fractures and a
// random smooth field.
std::vector<std::pair<std::string, MdFunction>> deformation_modes(const OperatorSet& ops, std::uint64_t seed);
// Φ(x) = R(θ) x + b on every copy, with exact derivatives.
Configuration rigid_configuration(const OperatorSet& ops, double theta, const Vec2& b);
double finite_strain_max(const Configuration& phi, const OperatorSet& ops);

struct TerzaghiRun {
  TerzaghiParams params;
  double dt = 0.0;
  int steps = 0;
  double max_rel_error = 0.0;    // max over steps and cells of |p - p_ref| / p0
  double error_at_probe = 0.0;   // |p - p_ref| / p0 at z = 0.5 and dimensionless time 0.1
  double probe_value = 0.0;
  double probe_reference = 0.0;
};
ModelConfig terzaghi_config(double h, double dt, int steps);
TerzaghiRun run_terzaghi(int cells, int steps, double tv_end);

ModelConfig signorini_config(int steps);
struct ContactRun {
  double max_kkt = 0.0;
  double min_opening = 0.0;
  int steps = 0;
  int open_steps = 0;
  int closed_steps = 0;
  int max_newton = 0;
};
ContactRun run_signorini(int steps);

ModelConfig coating_config();
// Largest skin-vertex residual of the hand-assembled surface balance over the steps run.
double coating_balance_residual(int steps);

ModelConfig slit_config();

}  // namespace mdpm
