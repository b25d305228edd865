#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdpm/errors.hpp"

namespace mdpm {

enum class RelationLabel {
  hooke_bulk,
  hooke_skin,
  tresca,
  tresca_regularized,
  contact_perp,
  contact_perp_regularized,
  signorini,
  darcy_forchheimer,
  frictionless,  // σ = 0 for every rate
  linear,        // σ = k · rate
};

const char* to_string(RelationLabel label);
RelationLabel parse_relation_label(const std::string& s);

struct RelationParams {
  double mu = 1.0;
  double lambda = 1.0;
  int dim = 2;  // n for the bulk, n - 1 for skins
  double tau = 1.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double c_inf = 1e6;
  double c_check = 0.0;  // shift making the regularized laws c-monotone
  double kappa1 = 1.0;
  double kappa2 = 0.0;
  double stiffness = 1.0;  // linear law
};

// A binary relation of pairs (pre, post).  pre is the stress (or flux), post the strain, rate
// or driving gradient.  The pair spaces are one- or two-dimensional depending on the label;
// Hooke relations act on symmetric matrices stored as (xx, yy, xy) with the Frobenius metric.
class MonotoneRelation {
 public:
  RelationLabel label = RelationLabel::linear;
  RelationParams params;

  MonotoneRelation() = default;
  MonotoneRelation(RelationLabel l, RelationParams p) : label(l), params(p) {}

  double claimed_constant() const;
  bool has_forward() const;
  // post as a function of pre, on the single-valued (or tie-broken) branch.
  Eigen::VectorXd forward(const Eigen::VectorXd& pre) const;
  // pre as a function of post where the inverse is single-valued (Hooke, contact, linear).
  Eigen::VectorXd inverse_forward(const Eigen::VectorXd& post) const;
  // Unique (pre, post) with pre + scale · post = w.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> resolvent(const Eigen::VectorXd& w, double scale) const;
  // Derivative of w ↦ pre (an element of the generalized Jacobian).
  Eigen::MatrixXd resolvent_jacobian(const Eigen::VectorXd& w, double scale) const;
  // Dimension of a pair component for this relation.
  int size() const;
};

// Hooke's law on a symmetric block: s = 2μ e + λ tr(e) I and its compliance.
Eigen::Matrix2d hooke_forward(const Eigen::Matrix2d& e, double mu, double lambda);
Eigen::Matrix2d hooke_compliance(const Eigen::Matrix2d& s, double mu, double lambda);
double skin_hooke_forward(double e, double mu, double lambda);

std::pair<Eigen::VectorXd, Eigen::VectorXd> tresca_resolvent(const Eigen::VectorXd& w, double tau, double scale);
Eigen::VectorXd tresca_regularized_forward(const Eigen::VectorXd& sigma, double tau, double c_inf, double c_check);
double contact_perp_forward(double rate, double c3, double c4);
std::pair<double, double> contact_perp_resolvent(double w, double scale, double c3, double c4);
std::pair<double, double> signorini_resolvent(double w, double scale);
double darcy_forchheimer_solve(double g, double kappa1, double kappa2);

// Bisection on a nondecreasing scalar function f for f(x) = 0 in [lo, hi], widening the bracket
// as needed; throws SolverError after max_iter iterations without reaching tol.
double monotone_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12, int max_iter = 200);

struct GapReport {
  double min_gap = 0.0;
  double constant = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

// min over sampled pairs of ⟨δpre, δpost⟩ − c |δpre|².  Pairs are produced by the resolvent from
// w drawn uniformly in the ball of radius 10 · max(τ, 1), with the resolvent scale drawn
// log-uniformly in [0.1, 10] so every branch of the relation is reached.
GapReport monotonicity_gap(const MonotoneRelation& rel, int n_samples, std::uint64_t seed);

// Every relation shipped, with its default parameters, for certification runs.
std::vector<MonotoneRelation> shipped_relations();

}  // namespace mdpm
