#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mdpm/verification.hpp"

using namespace mdpm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome rigid_invariance() {
  const auto ops = scenario_operators("slit.json", 1.0 / 16.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI), shift(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    worst = std::max(worst, finite_strain_max(rigid_configuration(*ops, angle(rng), Vec2(shift(rng), shift(rng))), *ops));
  }
  return {worst <= 1e-12, fmt("max |E| = %.3e over 200 motions", worst)};
}

double pairing(const MdOperator& a, const MdOperator& b, double sign, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec x(a.domain->size()), y(a.codomain->size());
    for (auto& v : x) v = d(rng);
    for (auto& v : y) v = d(rng);
    const double lhs = weighted_dot(*a.domain, b.apply(y), x);
    const double rhs = weighted_dot(*a.codomain, y, a.apply(x));
    const double scale = std::sqrt(weighted_dot(*a.domain, x, x) * weighted_dot(*a.codomain, y, y));
    worst = std::max(worst, std::abs(lhs - sign * rhs) / scale);
  }
  return worst;
}

Outcome adjointness() {
  const auto ops = scenario_operators("slit.json", 1.0 / 16.0);
  std::mt19937_64 rng(2);
  const double a = pairing(ops->symgrad_bc, ops->co_symgrad, -1.0, rng);
  const double b = pairing(ops->div_bc, ops->co_div, -1.0, rng);
  const double c = pairing(ops->trace_t, ops->trace, 1.0, rng);
  const double worst = std::max({a, b, c});
  char buf[160];
  std::snprintf(buf, sizeof buf, "symgrad %.2e, div %.2e, trace %.2e", a, b, c);
  return {worst <= 1e-12, buf};
}

Outcome linearization() {
  const auto ops = scenario_operators("slit.json", 1.0 / 16.0);
  double worst = 1e300;
  std::string detail;
  for (const auto& [name, u] : deformation_modes(*ops, 3)) {
    const ConsistencyReport c = linearization_consistency(*ops, u, {1e-1, 1e-2, 1e-3, 1e-4});
    worst = std::min({worst, c.slope_r, c.slope_s});
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.3f/%.3f; ", name.c_str(), c.slope_r, c.slope_s);
    detail += buf;
  }
  return {worst >= 1.9, detail + fmt("min slope %.3f", worst)};
}

Outcome monotonicity() {
  double worst = 1e300;
  int count = 0;
  std::uint64_t seed = 4;
  for (const auto& rel : shipped_relations()) {
    worst = std::min(worst, monotonicity_gap(rel, 10000, seed++).min_gap);
    ++count;
  }
  return {worst >= -1e-12, std::to_string(count) + " relations, min gap " + fmt("%.3e", worst)};
}

Outcome terzaghi() {
  const TerzaghiRun coarse = run_terzaghi(100, 200, 0.2);
  const TerzaghiRun fine = run_terzaghi(100, 400, 0.2);
  char buf[200];
  std::snprintf(buf, sizeof buf, "max rel error %.3e; error at z=0.5, Tv=0.1: %.3e (dt) -> %.3e (dt/2)",
                coarse.max_rel_error, coarse.error_at_probe, fine.error_at_probe);
  return {coarse.max_rel_error <= 0.02 && fine.error_at_probe < coarse.error_at_probe, buf};
}

Outcome contact() {
  const ContactRun r = run_signorini(40);
  char buf[200];
  std::snprintf(buf, sizeof buf, "max KKT %.3e, min opening %.3e, %d steps (%d with closed cells)", r.max_kkt,
                r.min_opening, r.steps, r.closed_steps);
  return {r.max_kkt <= 1e-8 && r.min_opening >= -1e-10 && r.closed_steps > 0, buf};
}

ModelConfig linear_config() {
  ModelConfig c = slit_config();
  c.tangential = RelationLabel::linear;
  c.normal = RelationLabel::linear;
  c.fracture.stiffness = 1.0;
  c.dt = 0.02;
  c.T = 1.0;
  c.bc.flow = {{2, FlowBC::drained}};
  c.forcing.source = 0.5;
  c.forcing.ramp = 0.2;
  return c;
}

Outcome well_posedness() {
  std::vector<double> ratios;
  for (double amp : {1e-2, 1.0, 1e2}) {
    ModelConfig c = linear_config();
    c.forcing.amplitude = amp;
    const Model m = build_model(c);
    const Trajectory traj = simulate(m.sys, make_forcing(c.forcing, *m.ops), c.steps());
    ratios.push_back(bound_check(traj, m.sys, c.nu).value_or(NAN));
  }
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  const double spread = (hi - lo) / lo;

  ModelConfig z = linear_config();
  z.forcing.amplitude = 0.0;
  const Model m = build_model(z);
  const Trajectory traj = simulate(m.sys, make_forcing(z.forcing, *m.ops), z.steps());
  double zmax = 0.0;
  for (const auto& s : traj.states) zmax = std::max(zmax, s.pack().cwiseAbs().maxCoeff());
  const bool zero_undefined = !bound_check(traj, m.sys, z.nu).has_value();
  char buf[200];
  std::snprintf(buf, sizeof buf, "ratios %.6e %.6e %.6e, spread %.2e; zero forcing max |x| = %g", ratios[0], ratios[1],
                ratios[2], spread, zmax);
  return {spread <= 0.05 && zmax == 0.0 && zero_undefined, buf};
}

ModelConfig tresca_config(bool degenerate) {
  ModelConfig c = slit_config();
  c.tangential = degenerate ? RelationLabel::tresca : RelationLabel::tresca_regularized;
  c.normal = RelationLabel::signorini;
  c.formulation = degenerate ? Formulation::degenerate : Formulation::standard;
  c.fracture.tau = 1e-3;
  c.fracture.c_check = degenerate ? 0.0 : 1e-6;
  c.fracture.c_inf = 1e12;
  c.dt = 0.02;
  c.T = 1.0;
  c.bc.flow = {{2, FlowBC::drained}};
  c.forcing.traction[2] = Vec2(1.0, 0.5);  // shear with opening
  return c;
}

Outcome equivalence() {
  const ModelConfig a = tresca_config(false), b = tresca_config(true);
  const Model ma = build_model(a), mb = build_model(b);
  const Trajectory ta = simulate(ma.sys, make_forcing(a.forcing, *ma.ops), 50);
  const Trajectory tb = simulate(mb.sys, make_forcing(b.forcing, *mb.ops), 50);
  double worst = 0.0;
  for (std::size_t k = 1; k < ta.states.size(); ++k) {
    for (auto field : {&PoroState::v, &PoroState::p, &PoroState::q}) {
      const Vec& x = (ta.states[k].*field).coeffs;
      const Vec& y = (tb.states[k].*field).coeffs;
      const double scale = std::max(x.norm(), 1e-300);
      worst = std::max(worst, (x - y).norm() / scale);
    }
  }
  return {worst <= 1e-6, fmt("max relative difference in (v, p, q) %.3e over 50 steps", worst)};
}

Outcome conservation() {
  ModelConfig c = slit_config();
  c.dt = 0.01;
  c.T = 5.0;
  c.forcing.traction[2] = Vec2(0.5, -1.0);
  c.forcing.body = Vec2(0.0, -0.3);
  c.forcing.period = 1.0;
  const Model m = build_model(c);
  double prev = 0.0, worst = 0.0;
  int steps = 0;
  auto observe = [&](const PoroState& s, const StepStats&, int) {
    const double mass = total_fluid_mass(s, m.sys);
    worst = std::max(worst, std::abs(mass - prev));
    prev = mass;
    ++steps;
  };
  prev = total_fluid_mass(zero_state(m.sys), m.sys);
  simulate(m.sys, make_forcing(c.forcing, *m.ops), c.steps(), std::nullopt, observe);
  char buf[120];
  std::snprintf(buf, sizeof buf, "max per-step drift %.3e over %d steps", worst, steps);
  return {worst <= 1e-10 && steps == 500, buf};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "rigid-body invariance", 10, rigid_invariance},
      {"AC2", "adjointness", 10, adjointness},
      {"AC3", "linearization consistency", 30, linearization},
      {"AC4", "monotonicity certification", 30, monotonicity},
      {"AC5", "consolidation reduction", 60, terzaghi},
      {"AC6", "contact reduction", 60, contact},
      {"AC7", "well-posedness proxy", 120, well_posedness},
      {"AC8", "formulation equivalence", 120, equivalence},
      {"AC9", "fluid mass conservation", 60, conservation},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %s  %-28s %6.2fs  %s%s\n", c.id.c_str(), pass ? "PASS" : "FAIL", c.title.c_str(), secs,
                o.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
