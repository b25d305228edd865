#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "mdpm/config.hpp"
#include "mdpm/constitutive.hpp"
#include "mdpm/operators.hpp"

namespace mdpm {

struct ForcingValues {
  Vec r_s, r_m, r_g;

  bool is_zero() const;
};

using ForcingFn = std::function<ForcingValues(double t)>;

// Loads described by a ForcingSpec, with constrained displacement and flux dofs zeroed.
ForcingFn make_forcing(const ForcingSpec& load, const OperatorSet& ops);
ForcingFn zero_forcing(const OperatorSet& ops);

// Offsets of the four fields in the composite vector [v; p; s̃; q].
struct Layout {
  int nv = 0, np = 0, ns = 0, nq = 0;
  int off_p = 0, off_s = 0, off_q = 0;
  int size() const { return nv + np + ns + nq; }
};

struct PoroState {
  double t = 0.0;
  MdFunction v, p, s, q, u;
  // Degenerate formulation: the fracture tractions live here and the fracture blocks of s are zero.
  Vec fracture_traction;

  Vec pack() const;
};

// One fracture component together with its relation.
struct FractureRow {
  int dof = 0;     // strain-space dof
  int root = 0;
  int cell = 0;
  int comp = 0;    // 0 tangential, 1 normal
  MonotoneRelation relation;
  bool strain_law = false;  // Signorini pairs the traction with the strain, not its rate
  double scale = 1.0;       // resolvent scale
};

struct SolverCache;

struct BlockSystem {
  ModelConfig cfg;
  std::shared_ptr<const OperatorSet> ops;
  Layout layout;
  Vec weights;               // composite mass weights
  SpMat M0, M1, A1;          // weighted bilinear forms: x ↦ W·M0·x etc.
  SpMat Ahat;                // compliance on the strain space (zero on fracture blocks)
  SpMat That;                // γ̂·𝔗 : P → G
  Vec alpha_g, gamma_check, gamma_hat, beta_p;
  Vec kappa1_q, kappa2_q;
  std::vector<FractureRow> fracture_rows;
  std::vector<int> fixed_rows;   // strain-space dofs forced to zero (coating-free skins)
  double dt = 0.0;
  SpMat step_matrix;             // W·M0/Δt + W·A1 on the linear rows
  Vec linear_rows;               // 1 on rows assembled from step_matrix
  Eigen::SparseMatrix<double, Eigen::RowMajor> symgrad_rows;
  std::shared_ptr<SolverCache> cache;
};

struct StepStats {
  int newton_iterations = 0;
  int fixed_point_iterations = 0;
  bool fallback = false;
  bool rate_cap_warning = false;
  int factorizations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  std::vector<int> active_changes;
  std::string failure;  // why the Newton iteration stopped, when it did not converge
};

BlockSystem assemble_blocks(const ModelConfig& cfg, std::shared_ptr<const OperatorSet> ops);
PoroState zero_state(const BlockSystem& sys);
PoroState unpack(const BlockSystem& sys, const Vec& x, const PoroState& prev);

// One backward-Euler step of length sys.dt.  Throws SolverError when both solvers fail.
PoroState step(const PoroState& state, const BlockSystem& sys, const ForcingValues& f, StepStats* stats = nullptr);

struct Trajectory {
  std::vector<PoroState> states;       // states[0] is the initial state
  std::vector<ForcingValues> forcing;  // forcing[k] acts on the step ending at states[k]
  std::vector<StepStats> stats;
};

using StepObserver = std::function<void(const PoroState&, const StepStats&, int)>;

Trajectory simulate(const BlockSystem& sys, const ForcingFn& forcing, int steps,
                    const std::optional<PoroState>& initial = std::nullopt, const StepObserver& observer = {});

struct Model {
  std::shared_ptr<const MdGeometry> geom;
  std::shared_ptr<const MdMesh> mesh;
  std::shared_ptr<const OperatorSet> ops;
  BlockSystem sys;
};
Model build_model(const ModelConfig& cfg);

double state_norm_sq(const BlockSystem& sys, const Vec& x);
Vec forcing_pack(const BlockSystem& sys, const ForcingValues& f);
// Trapezoid quadrature of e^{-2νt} |x(t)|² over the trajectory window.
double weighted_norm(const Trajectory& traj, const BlockSystem& sys, double nu);
double weighted_forcing_norm(const Trajectory& traj, const BlockSystem& sys, double nu);
// sqrt of the ratio of the two weighted integrals; empty for zero forcing.
std::optional<double> bound_check(const Trajectory& traj, const BlockSystem& sys, double nu);

double total_fluid_mass(const PoroState& state, const BlockSystem& sys);
Vec fluid_mass(const PoroState& state, const BlockSystem& sys);
double energy(const PoroState& state, const BlockSystem& sys);
double skew_residual(const BlockSystem& sys);
double symmetry_residual(const BlockSystem& sys);

struct ContactReport {
  double kkt = 0.0;          // max over cells of |σ e| + σ₊ + (−e)₊
  double min_opening = 0.0;  // min normal strain
  int open_cells = 0;
  int closed_cells = 0;
};
ContactReport contact_report(const PoroState& state, const BlockSystem& sys);

}  // namespace mdpm
