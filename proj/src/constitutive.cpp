#include "mdpm/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mdpm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(RelationLabel label) {
  switch (label) {
    case RelationLabel::hooke_bulk: return "hooke_bulk";
    case RelationLabel::hooke_skin: return "hooke_skin";
    case RelationLabel::tresca: return "tresca";
    case RelationLabel::tresca_regularized: return "tresca_regularized";
    case RelationLabel::contact_perp: return "contact_perp";
    case RelationLabel::contact_perp_regularized: return "contact_perp_regularized";
    case RelationLabel::signorini: return "signorini";
    case RelationLabel::darcy_forchheimer: return "darcy_forchheimer";
    case RelationLabel::frictionless: return "frictionless";
    case RelationLabel::linear: return "linear";
  }
  return "?";
}

RelationLabel parse_relation_label(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(RelationLabel::linear); ++i) {
    auto l = static_cast<RelationLabel>(i);
    if (s == to_string(l)) return l;
  }
  throw ConfigError("unknown relation '" + s + "'");
}

Eigen::Matrix2d hooke_forward(const Eigen::Matrix2d& e, double mu, double lambda) {
  if (std::abs(e(0, 1) - e(1, 0)) > 1e-12) throw RelationError("Hooke's law needs a symmetric strain");
  return 2.0 * mu * e + lambda * e.trace() * Eigen::Matrix2d::Identity();
}

Eigen::Matrix2d hooke_compliance(const Eigen::Matrix2d& s, double mu, double lambda) {
  if (std::abs(s(0, 1) - s(1, 0)) > 1e-12) throw RelationError("Hooke's law needs a symmetric stress");
  return (s - lambda / (2.0 * mu + 2.0 * lambda) * s.trace() * Eigen::Matrix2d::Identity()) / (2.0 * mu);
}

double skin_hooke_forward(double e, double mu, double lambda) { return (2.0 * mu + lambda) * e; }

std::pair<VectorXd, VectorXd> tresca_resolvent(const VectorXd& w, double tau, double scale) {
  const double nw = w.norm();
  VectorXd sigma = nw <= tau ? w : VectorXd(tau * w / nw);
  return {sigma, (w - sigma) / scale};
}

VectorXd tresca_regularized_forward(const VectorXd& sigma, double tau, double c_inf, double c_check) {
  const double ns = sigma.norm();
  VectorXd rate = c_check * sigma;
  if (ns > tau) rate += c_inf * sigma / ns;
  return rate;
}

double contact_perp_forward(double rate, double c3, double c4) { return -c3 * std::pow(std::max(-rate, 0.0), c4); }

double monotone_root(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  for (int k = 0; flo > 0.0 && k < 60; ++k) {
    lo -= (hi - lo) + 1.0;
    flo = f(lo);
  }
  for (int k = 0; fhi < 0.0 && k < 60; ++k) {
    hi += (hi - lo) + 1.0;
    fhi = f(hi);
  }
  if (flo > 0.0 || fhi < 0.0) throw SolverError("monotone root: no sign change in the bracket");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) lo = mid; else hi = mid;
    if (hi - lo <= tol * std::max(1.0, std::abs(mid))) return 0.5 * (lo + hi);
  }
  throw SolverError("monotone root: no convergence within the iteration limit");
}

namespace {

// s ≥ 0 solving a·s + scale·(s/C³)^{1/C⁴} = b for b ≥ 0.
double compression_root(double a, double scale, double c3, double c4, double b) {
  if (b <= 0.0) return 0.0;
  if (c4 == 1.0) return b / (a + scale / c3);
  auto f = [&](double s) { return a * std::max(s, 0.0) + scale * std::pow(std::max(s, 0.0) / c3, 1.0 / c4) - b; };
  return monotone_root(f, 0.0, b / a);
}

double compression_slope(double a, double scale, double c3, double c4, double s) {
  if (c4 == 1.0) return 1.0 / (a + scale / c3);
  if (s <= 0.0) return 0.0;
  return 1.0 / (a + scale * (1.0 / c4) * std::pow(s / c3, 1.0 / c4 - 1.0) / c3);
}

// Compliance of Hooke's law in (xx, yy, xy) coordinates for the bulk.
MatrixXd bulk_compliance(double mu, double lambda, int n) {
  MatrixXd K = MatrixXd::Zero(3, 3);
  const double a = lambda / (2.0 * mu + n * lambda);
  K(0, 0) = K(1, 1) = (1.0 - a) / (2.0 * mu);
  K(0, 1) = K(1, 0) = -a / (2.0 * mu);
  K(2, 2) = 1.0 / (2.0 * mu);
  return K;
}

}  // namespace

std::pair<double, double> contact_perp_resolvent(double w, double scale, double c3, double c4) {
  if (w >= 0.0 || c3 == 0.0) return {0.0, w / scale};
  const double s = compression_root(1.0, scale, c3, c4, -w);
  return {-s, (w + s) / scale};
}

std::pair<double, double> signorini_resolvent(double w, double scale) {
  if (w <= 0.0) return {w, 0.0};
  return {0.0, w / scale};
}

double darcy_forchheimer_solve(double g, double kappa1, double kappa2) {
  if (kappa2 <= 0.0) return g / kappa1;
  const double a = (-kappa1 + std::sqrt(kappa1 * kappa1 + 4.0 * kappa2 * std::abs(g))) / (2.0 * kappa2);
  return g >= 0.0 ? a : -a;
}

int MonotoneRelation::size() const {
  switch (label) {
    case RelationLabel::hooke_bulk: return 3;
    case RelationLabel::tresca:
    case RelationLabel::tresca_regularized: return std::max(1, params.dim - 1);
    default: return 1;
  }
}

double MonotoneRelation::claimed_constant() const {
  const auto& p = params;
  switch (label) {
    case RelationLabel::hooke_bulk:
    case RelationLabel::hooke_skin: return 1.0 / (2.0 * p.mu + p.dim * p.lambda);
    case RelationLabel::darcy_forchheimer: return p.kappa1;
    case RelationLabel::tresca_regularized:
    case RelationLabel::contact_perp_regularized: return p.c_check;
    default: return 0.0;
  }
}

bool MonotoneRelation::has_forward() const {
  switch (label) {
    case RelationLabel::hooke_bulk:
    case RelationLabel::hooke_skin:
    case RelationLabel::tresca_regularized:
    case RelationLabel::contact_perp_regularized:
    case RelationLabel::darcy_forchheimer:
    case RelationLabel::linear: return true;
    default: return false;
  }
}

VectorXd MonotoneRelation::forward(const VectorXd& pre) const {
  const auto& p = params;
  switch (label) {
    case RelationLabel::hooke_bulk: return bulk_compliance(p.mu, p.lambda, p.dim) * pre;
    case RelationLabel::hooke_skin: return pre / (2.0 * p.mu + p.lambda);
    case RelationLabel::tresca_regularized: return tresca_regularized_forward(pre, p.tau, p.c_inf, p.c_check);
    case RelationLabel::contact_perp_regularized: {
      const double s = pre(0);
      double rate = 0.0;  // σ = 0 takes the minimal-norm rate
      if (s < 0.0) rate = p.c3 > 0.0 ? -std::pow(-s / p.c3, 1.0 / p.c4) : 0.0;
      if (s > 0.0) rate = p.c_inf;
      return VectorXd::Constant(1, rate + p.c_check * s);
    }
    case RelationLabel::darcy_forchheimer: return (p.kappa1 + p.kappa2 * pre.norm()) * pre;
    case RelationLabel::linear: return pre / p.stiffness;
    case RelationLabel::tresca: {
      if (pre.norm() > p.tau * (1.0 + 1e-14)) throw RelationError("tresca: stress outside the admissible set");
      return VectorXd::Zero(pre.size());
    }
    case RelationLabel::contact_perp: {
      if (pre(0) > 0.0) throw RelationError("contact: tensile normal traction");
      const double rate = p.c3 > 0.0 ? -std::pow(-pre(0) / p.c3, 1.0 / p.c4) : 0.0;
      return VectorXd::Constant(1, pre(0) < 0.0 ? rate : 0.0);
    }
    case RelationLabel::signorini: {
      if (pre(0) > 0.0) throw RelationError("signorini: tensile normal traction");
      return VectorXd::Zero(1);
    }
    case RelationLabel::frictionless: {
      if (pre.norm() != 0.0) throw RelationError("frictionless: nonzero traction");
      return VectorXd::Zero(pre.size());
    }
  }
  throw RelationError("forward evaluation not available");
}

VectorXd MonotoneRelation::inverse_forward(const VectorXd& post) const {
  const auto& p = params;
  switch (label) {
    case RelationLabel::hooke_bulk: return bulk_compliance(p.mu, p.lambda, p.dim).inverse() * post;
    case RelationLabel::hooke_skin: return (2.0 * p.mu + p.lambda) * post;
    case RelationLabel::contact_perp: return VectorXd::Constant(1, contact_perp_forward(post(0), p.c3, p.c4));
    case RelationLabel::linear: return p.stiffness * post;
    case RelationLabel::frictionless: return VectorXd::Zero(post.size());
    case RelationLabel::tresca: {
      if (post.norm() == 0.0) throw RelationError("tresca: stress is set-valued at zero rate");
      return p.tau * post / post.norm();
    }
    default: throw RelationError(std::string(to_string(label)) + ": inverse evaluation not available");
  }
}

std::pair<VectorXd, VectorXd> MonotoneRelation::resolvent(const VectorXd& w, double scale) const {
  if (!(scale > 0.0)) throw RelationError("resolvent scale must be positive");
  const auto& p = params;
  VectorXd sigma;
  switch (label) {
    case RelationLabel::hooke_bulk:
      sigma = (MatrixXd::Identity(3, 3) + scale * bulk_compliance(p.mu, p.lambda, p.dim)).lu().solve(w);
      break;
    case RelationLabel::hooke_skin: sigma = w / (1.0 + scale / (2.0 * p.mu + p.lambda)); break;
    case RelationLabel::tresca: return tresca_resolvent(w, p.tau, scale);
    case RelationLabel::tresca_regularized: {
      const double a = 1.0 + scale * p.c_check, nw = w.norm();
      if (nw <= p.tau * a) sigma = w / a;
      else if (nw <= p.tau * a + scale * p.c_inf) sigma = p.tau * w / nw;
      else sigma = (w - scale * p.c_inf * w / nw) / a;
      break;
    }
    case RelationLabel::contact_perp: {
      auto [s, r] = contact_perp_resolvent(w(0), scale, p.c3, p.c4);
      return {VectorXd::Constant(1, s), VectorXd::Constant(1, r)};
    }
    case RelationLabel::contact_perp_regularized: {
      const double a = 1.0 + scale * p.c_check, x = w(0);
      double s = 0.0;
      if (x < 0.0) s = p.c3 > 0.0 ? -compression_root(a, scale, p.c3, p.c4, -x) : 0.0;
      else if (x > scale * p.c_inf) s = (x - scale * p.c_inf) / a;
      sigma = VectorXd::Constant(1, s);
      break;
    }
    case RelationLabel::signorini: {
      auto [s, e] = signorini_resolvent(w(0), scale);
      return {VectorXd::Constant(1, s), VectorXd::Constant(1, e)};
    }
    case RelationLabel::darcy_forchheimer: {
      const double nw = w.norm();
      const double a = 1.0 + scale * p.kappa1, b = scale * p.kappa2;
      const double nq = b > 0.0 ? (-a + std::sqrt(a * a + 4.0 * b * nw)) / (2.0 * b) : nw / a;
      sigma = nw > 0.0 ? VectorXd(w * (nq / nw)) : VectorXd::Zero(w.size());
      break;
    }
    case RelationLabel::frictionless: sigma = VectorXd::Zero(w.size()); break;
    case RelationLabel::linear: sigma = w / (1.0 + scale / p.stiffness); break;
  }
  return {sigma, (w - sigma) / scale};
}

MatrixXd MonotoneRelation::resolvent_jacobian(const VectorXd& w, double scale) const {
  const auto& p = params;
  const int m = static_cast<int>(w.size());
  const MatrixXd I = MatrixXd::Identity(m, m);
  switch (label) {
    case RelationLabel::hooke_bulk:
      return (MatrixXd::Identity(3, 3) + scale * bulk_compliance(p.mu, p.lambda, p.dim)).inverse();
    case RelationLabel::hooke_skin: return I / (1.0 + scale / (2.0 * p.mu + p.lambda));
    case RelationLabel::tresca: {
      const double nw = w.norm();
      if (nw <= p.tau) return I;
      const VectorXd d = w / nw;
      return p.tau * (I - d * d.transpose()) / nw;
    }
    case RelationLabel::tresca_regularized: {
      const double a = 1.0 + scale * p.c_check, nw = w.norm();
      if (nw <= p.tau * a) return I / a;
      const VectorXd d = w / nw;
      const MatrixXd Pt = I - d * d.transpose();
      if (nw <= p.tau * a + scale * p.c_inf) return p.tau * Pt / nw;
      return (I - scale * p.c_inf * Pt / nw) / a;
    }
    case RelationLabel::contact_perp: {
      if (w(0) >= 0.0 || p.c3 == 0.0) return MatrixXd::Zero(1, 1);
      const double s = compression_root(1.0, scale, p.c3, p.c4, -w(0));
      return MatrixXd::Constant(1, 1, compression_slope(1.0, scale, p.c3, p.c4, s));
    }
    case RelationLabel::contact_perp_regularized: {
      const double a = 1.0 + scale * p.c_check, x = w(0);
      if (x < 0.0) {
        if (p.c3 == 0.0) return MatrixXd::Zero(1, 1);
        const double s = compression_root(a, scale, p.c3, p.c4, -x);
        return MatrixXd::Constant(1, 1, compression_slope(a, scale, p.c3, p.c4, s));
      }
      if (x <= scale * p.c_inf) return MatrixXd::Zero(1, 1);
      return MatrixXd::Constant(1, 1, 1.0 / a);
    }
    case RelationLabel::signorini: return MatrixXd::Constant(1, 1, w(0) <= 0.0 ? 1.0 : 0.0);
    case RelationLabel::darcy_forchheimer: {
      const double a = 1.0 + scale * p.kappa1, b = scale * p.kappa2;
      const double nq = resolvent(w, scale).first.norm();
      const double nw = w.norm();
      const double radial = 1.0 / (a + 2.0 * b * nq);
      if (nw == 0.0 || m == 1) return I * radial;
      const VectorXd d = w / nw;
      return radial * d * d.transpose() + (nq / nw) * (I - d * d.transpose());
    }
    case RelationLabel::frictionless: return MatrixXd::Zero(m, m);
    case RelationLabel::linear: return I / (1.0 + scale / p.stiffness);
  }
  // Finite differences for anything not covered above.
  MatrixXd J(m, m);
  const double h = 1e-7 * std::max(1.0, w.norm());
  for (int k = 0; k < m; ++k) {
    VectorXd wp = w, wm = w;
    wp(k) += h;
    wm(k) -= h;
    J.col(k) = (resolvent(wp, scale).first - resolvent(wm, scale).first) / (2.0 * h);
  }
  return J;
}

GapReport monotonicity_gap(const MonotoneRelation& rel, int n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int m = rel.size();
  const double radius = 10.0 * std::max(rel.params.tau, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
  VectorXd metric = VectorXd::Ones(m);
  if (rel.label == RelationLabel::hooke_bulk) metric(2) = 2.0;
  auto sample_w = [&]() {
    VectorXd w(m);
    do {
      for (int k = 0; k < m; ++k) w(k) = unit(rng);
    } while (w.norm() > 1.0);
    return VectorXd(radius * w);
  };
  GapReport rep;
  rep.constant = rel.claimed_constant();
  rep.samples = n_samples;
  rep.seed = seed;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double scale = std::pow(10.0, log_scale(rng));
    auto [s1, e1] = rel.resolvent(sample_w(), scale);
    auto [s2, e2] = rel.resolvent(sample_w(), scale);
    const VectorXd ds = s1 - s2, de = e1 - e2;
    const double gap = ds.cwiseProduct(metric).dot(de) - rep.constant * ds.cwiseProduct(metric).dot(ds);
    rep.min_gap = std::min(rep.min_gap, gap);
  }
  return rep;
}

std::vector<MonotoneRelation> shipped_relations() {
  std::vector<MonotoneRelation> out;
  RelationParams p;
  out.emplace_back(RelationLabel::hooke_bulk, p);
  RelationParams skin = p;
  skin.dim = 1;
  out.emplace_back(RelationLabel::hooke_skin, skin);
  out.emplace_back(RelationLabel::tresca, p);
  RelationParams reg = p;
  reg.c_inf = 5.0;
  reg.c_check = 0.1;
  out.emplace_back(RelationLabel::tresca_regularized, reg);
  out.emplace_back(RelationLabel::contact_perp, p);
  RelationParams rough = p;
  rough.c4 = 2.0;
  out.emplace_back(RelationLabel::contact_perp, rough);
  out.emplace_back(RelationLabel::contact_perp_regularized, reg);
  RelationParams rough_reg = reg;
  rough_reg.c4 = 2.0;
  out.emplace_back(RelationLabel::contact_perp_regularized, rough_reg);
  out.emplace_back(RelationLabel::signorini, p);
  RelationParams flow = p;
  flow.kappa1 = 2.0;
  flow.kappa2 = 1.0;
  out.emplace_back(RelationLabel::darcy_forchheimer, flow);
  out.emplace_back(RelationLabel::frictionless, p);
  out.emplace_back(RelationLabel::linear, p);
  return out;
}

}  // namespace mdpm
