#include "mdpm/verification.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace mdpm {

double TerzaghiParams::consolidation_coefficient() const {
  return (1.0 / kappa1) / (beta + alpha * alpha / (lambda + 2.0 * mu));
}

double TerzaghiParams::initial_pressure() const {
  return alpha * load / (beta * (lambda + 2.0 * mu) + alpha * alpha);
}

double TerzaghiParams::dimensionless_time(double t) const {
  return consolidation_coefficient() * t / (height * height);
}

double terzaghi_reference(const TerzaghiParams& prm, double z, double t) {
  if (t < 0.0) throw Error("consolidation time must be nonnegative");
  const double tv = prm.dimensionless_time(t);
  // Distance from the drained top, scaled by the drainage length.
  const double zeta = (prm.height - z) / prm.height;
  double sum = 0.0;
  for (int m = 0; m < prm.terms; ++m) {
    const double M = 0.5 * M_PI * (2 * m + 1);
    sum += 2.0 / M * std::sin(M * zeta) * std::exp(-M * M * tv);
  }
  return prm.initial_pressure() * sum;
}

bool SuiteReport::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string SuiteReport::table() const {
  std::ostringstream os;
  os << "suite " << name << " (" << std::fixed << std::setprecision(2) << seconds << " s)\n";
  for (const auto& c : checks) {
    os << "  " << (c.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(52) << c.name << std::right
       << std::scientific << std::setprecision(3) << " value " << c.value << "  tol " << c.tolerance;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

CheckResult at_most(const std::string& name, double value, double tol, const std::string& detail = "") {
  return {name, value, tol, std::isfinite(value) && value <= tol, detail};
}

CheckResult at_least(const std::string& name, double value, double tol, const std::string& detail = "") {
  return {name, value, tol, std::isfinite(value) && value >= tol, detail};
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = d(rng);
  return x;
}

double weighted_norm_of(const MdSpace& s, const Vec& x) { return std::sqrt(weighted_dot(s, x, x)); }

// Largest |<B y, x>_dom - sign <y, A x>_cod| / (|x| |y|) over random pairs.
double pairing_residual(const MdOperator& a, const MdOperator& b, double sign, int pairs, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Vec x = random_vec(a.domain->size(), rng);
    const Vec y = random_vec(a.codomain->size(), rng);
    const double lhs = weighted_dot(*a.domain, b.apply(y), x);
    const double rhs = weighted_dot(*a.codomain, y, a.apply(x));
    const double scale = weighted_norm_of(*a.domain, x) * weighted_norm_of(*a.codomain, y);
    worst = std::max(worst, std::abs(lhs - sign * rhs) / scale);
  }
  return worst;
}

Vec vector_field(const OperatorSet& ops, const std::function<Vec2(const Vec2&, int)>& f) {
  const MdMesh& m = *ops.mesh;
  Vec u = Vec::Zero(ops.U->size());
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    const int owner = m.copies[c].owner;
    auto it = m.skin_side.find(owner);
    const int side = it == m.skin_side.end() ? 0 : it->second.second;
    const Vec2 y = f(m.vertices[m.copies[c].vertex], side);
    const int d = ops.U->dof(owner, c, 0);
    u(d) = y(0);
    u(d + 1) = y(1);
  }
  return u;
}

}  // namespace

std::shared_ptr<const OperatorSet> scenario_operators(const std::string& geometry, double h, const BoundaryConditions& bc) {
  auto geom = std::make_shared<const MdGeometry>(load_geometry(resolve_data_path(geometry)));
  auto mesh = std::make_shared<const MdMesh>(build_mesh(geom, h));
  return std::make_shared<const OperatorSet>(assemble_operators(mesh, bc));
}

std::vector<std::pair<std::string, MdFunction>> deformation_modes(const OperatorSet& ops, std::uint64_t seed) {
  std::vector<std::pair<std::string, MdFunction>> out;
  out.emplace_back("stretch", MdFunction(ops.U, vector_field(ops, [](const Vec2& x, int) {
                                           return Vec2(0.4 * x(0), -0.2 * x(1) + 0.1 * x(0));
                                         })));
  out.emplace_back("opening shear", MdFunction(ops.U, vector_field(ops, [](const Vec2& x, int side) -> Vec2 {
                                                 return Vec2(0.3 * x(1), 0.0) + side * Vec2(0.004, 0.005);
                                               })));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, 8> c{};
  for (double& v : c) v = u(rng);
  out.emplace_back("smooth random", MdFunction(ops.U, vector_field(ops, [c](const Vec2& x, int) {
                                                 return Vec2(0.2 * c[0] * std::sin(M_PI * x(0) + c[1]) + 0.2 * c[2] * x(1) * x(1),
                                                             0.2 * c[4] * std::cos(2.0 * x(1) + c[5]) + 0.2 * c[6] * x(0) * x(1));
                                               })));
  return out;
}

Configuration rigid_configuration(const OperatorSet& ops, double theta, const Vec2& b) {
  Mat2 R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return configuration_from_map(
      ops, [R, b](const Vec2& x, int) { return Vec2(R * x + b); }, [R](const Vec2&) { return R; });
}

double finite_strain_max(const Configuration& phi, const OperatorSet& ops) {
  const Configuration base = reference_configuration(ops);
  const MdFunction e = finite_strain(phi, base, ops);
  return e.coeffs.size() == 0 ? 0.0 : e.coeffs.cwiseAbs().maxCoeff();
}

SuiteReport operator_suite(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  SuiteReport rep;
  rep.name = "operators";
  std::mt19937_64 rng(opt.seed);
  const double tol = 1e-12 * opt.tol_scale;
  for (const std::string geo : {"slit.json", "crossing.json"}) {
    const auto ops = scenario_operators(geo, 1.0 / 8.0);
    const OperatorSet& o = *ops;
    rep.checks.push_back(at_most(geo + ": symgrad / co-symgrad pairing",
                                 pairing_residual(o.symgrad_bc, o.co_symgrad, -1.0, 100, rng), tol));
    rep.checks.push_back(at_most(geo + ": div / co-div pairing", pairing_residual(o.div_bc, o.co_div, -1.0, 100, rng), tol));
    rep.checks.push_back(at_most(geo + ": trace / co-trace pairing", pairing_residual(o.trace_t, o.trace, 1.0, 100, rng), tol));
    rep.checks.push_back(at_most(geo + ": exact co-symgrad residual", adjoint_residual(o.symgrad_bc, o.co_symgrad), tol));
    rep.checks.push_back(at_most(geo + ": exact co-div residual", adjoint_residual(o.div_bc, o.co_div), tol));

    double cons = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec q = random_vec(o.Q->size(), rng);
      const Vec d = o.div_bc.apply(q);
      cons = std::max(cons, std::abs(o.P->weights.dot(d)) / (1.0 + q.cwiseAbs().maxCoeff()));
    }
    rep.checks.push_back(at_most(geo + ": closed-system mass telescoping", cons, tol));

    const Vec trans = vector_field(o, [](const Vec2&, int) { return Vec2(0.7, -1.3); });
    rep.checks.push_back(at_most(geo + ": translations in symgrad kernel", o.symgrad.apply(trans).cwiseAbs().maxCoeff(), tol));

    double ext = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec u = random_vec(o.U->size(), rng);
      ext = std::max(ext, (o.restriction.apply(o.extension.apply(u)) - u).cwiseAbs().maxCoeff());
    }
    rep.checks.push_back(at_most(geo + ": restriction of extension", ext, tol));
  }
  {
    const auto ops = scenario_operators("box.json", 1.0 / 8.0);
    const Vec rot = vector_field(*ops, [](const Vec2& x, int) { return Vec2(-x(1), x(0)); });
    const Vec e = ops->symgrad.apply(rot);
    rep.checks.push_back(at_most("box.json: rotations in symmetric part", e.cwiseAbs().maxCoeff(), tol));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

SuiteReport relation_suite(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  SuiteReport rep;
  rep.name = "relations";
  std::uint64_t seed = opt.seed;
  for (const auto& rel : shipped_relations()) {
    const GapReport g = monotonicity_gap(rel, 10000, seed++);
    std::ostringstream d;
    d << "c=" << g.constant << " seed=" << g.seed;
    rep.checks.push_back(at_least(std::string("monotone ") + to_string(rel.label), g.min_gap, -1e-12 * opt.tol_scale, d.str()));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

SuiteReport strain_suite(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  SuiteReport rep;
  rep.name = "strain";
  const auto ops = scenario_operators("slit.json", 1.0 / 8.0);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI), shift(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Configuration phi = rigid_configuration(*ops, angle(rng), Vec2(shift(rng), shift(rng)));
    worst = std::max(worst, finite_strain_max(phi, *ops));
  }
  rep.checks.push_back(at_most("rigid motions leave zero strain", worst, 1e-12 * opt.tol_scale));
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  for (const auto& [name, u] : deformation_modes(*ops, opt.seed)) {
    const ConsistencyReport c = linearization_consistency(*ops, u, eps);
    rep.checks.push_back(at_least(name + ": strain remainder slope", c.slope_r, 1.9));
    rep.checks.push_back(at_least(name + ": volume remainder slope", c.slope_s, 1.9));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

ModelConfig terzaghi_config(double h, double dt, int steps) {
  ModelConfig c;
  c.geometry_file = "geometries/column.json";
  c.h = h;
  c.rho = 1e-6;  // quasi-static loading
  c.mu = c.lambda = 1.0;
  c.alpha.value = 1.0;
  c.beta.value = 1.0;
  c.kappa1.value = 1.0;
  c.kappa2.value = 0.0;
  c.dt = dt;
  c.T = dt * steps;
  c.bc.mech = {{0, MechBC::roller}, {1, MechBC::roller}, {2, MechBC::free}, {3, MechBC::roller}};
  c.bc.flow = {{2, FlowBC::drained}};
  c.forcing.traction[2] = Vec2(0.0, -1.0);
  return c;
}

TerzaghiRun run_terzaghi(int cells, int steps, double tv_end) {
  TerzaghiRun run;
  const double cv = run.params.consolidation_coefficient();
  run.steps = steps;
  run.dt = tv_end / cv / steps;
  const ModelConfig cfg = terzaghi_config(1.0 / cells, run.dt, steps);
  const Model model = build_model(cfg);
  const MdMesh& m = *model.mesh;
  const double p0 = run.params.initial_pressure();
  const int probe_step = static_cast<int>(std::llround(0.1 / cv / run.dt));
  auto observe = [&](const PoroState& s, const StepStats&, int k) {
    const double tv = run.params.dimensionless_time(s.t);
    double probe_p = 0.0, probe_ref = 0.0, probe_dist = 1e300;
    for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
      const double z = m.tris[t].centroid(1);
      const double p = s.p.coeffs(model.ops->P->dof(m.bulk_root, t));
      const double ref = terzaghi_reference(run.params, z, s.t);
      if (tv >= 0.01) run.max_rel_error = std::max(run.max_rel_error, std::abs(p - ref) / p0);
      if (std::abs(z - 0.5) < probe_dist) {
        probe_dist = std::abs(z - 0.5);
        probe_p = p;
        probe_ref = ref;
      }
    }
    if (k == probe_step) {
      run.probe_value = probe_p;
      run.probe_reference = probe_ref;
      run.error_at_probe = std::abs(probe_p - probe_ref) / p0;
    }
  };
  simulate(model.sys, make_forcing(cfg.forcing, *model.ops), steps, std::nullopt, observe);
  return run;
}

ModelConfig slit_config() {
  ModelConfig c;
  c.geometry_file = "geometries/slit.json";
  c.h = 1.0 / 16.0;
  c.dt = 0.02;
  c.T = 1.0;
  c.bc.mech = {{2, MechBC::free}};
  c.forcing.traction[2] = Vec2(0.5, -1.0);
  return c;
}

ModelConfig signorini_config(int steps) {
  ModelConfig c = slit_config();
  c.alpha.value = 0.0;
  c.rho = 1e-3;
  c.tangential = RelationLabel::frictionless;
  c.normal = RelationLabel::signorini;
  c.fracture.c_check = 0.0;
  c.dt = 1.0 / steps;
  c.T = 1.0;
  c.forcing.traction[2] = Vec2(0.2, -1.0);
  c.forcing.period = 1.0;
  return c;
}

ContactRun run_signorini(int steps) {
  const ModelConfig cfg = signorini_config(steps);
  const Model model = build_model(cfg);
  ContactRun run;
  run.min_opening = 1e300;
  auto observe = [&](const PoroState& s, const StepStats& st, int) {
    const ContactReport c = contact_report(s, model.sys);
    run.max_kkt = std::max(run.max_kkt, c.kkt);
    run.min_opening = std::min(run.min_opening, c.min_opening);
    run.max_newton = std::max(run.max_newton, st.newton_iterations);
    if (c.open_cells > 0) ++run.open_steps;
    if (c.closed_cells > 0) ++run.closed_steps;
    ++run.steps;
  };
  simulate(model.sys, make_forcing(cfg.forcing, *model.ops), cfg.steps(), std::nullopt, observe);
  return run;
}

ModelConfig coating_config() {
  ModelConfig c = slit_config();
  c.alpha.value = 0.0;
  c.coating = true;
  c.mu_skin = 0.5;
  c.lambda_skin = 0.25;
  c.tangential = RelationLabel::linear;
  c.normal = RelationLabel::linear;
  c.fracture.stiffness = 2.0;
  c.dt = 0.05;
  c.T = 0.5;
  return c;
}

double coating_balance_residual(int steps) {
  const ModelConfig cfg = coating_config();
  const Model model = build_model(cfg);
  const OperatorSet& o = *model.ops;
  const MdMesh& m = *model.mesh;
  const MdSpace& U = *o.U;
  const MdSpace& G = *o.G;
  const ForcingFn forcing = make_forcing(cfg.forcing, o);

  // Internal force on one skin-vertex dof, assembled cell by cell from the stresses.
  auto internal_force = [&](const Vec& s, int copy, int a) {
    double f = 0.0;
    for (int t : m.copies[copy].tris) {
      const BulkTriangle& tr = m.tris[t];
      int corner = 0;
      while (tr.copy[corner] != copy) ++corner;
      const double gx = tr.grad(corner, 0), gy = tr.grad(corner, 1);
      const double sxx = s(G.dof(m.bulk_root, t, 0)), syy = s(G.dof(m.bulk_root, t, 1)), sxy = s(G.dof(m.bulk_root, t, 2));
      f += tr.area * (a == 0 ? sxx * gx + sxy * gy : syy * gy + sxy * gx);
    }
    for (const auto& [r, fm] : m.fractures) {
      for (const auto& cell : fm.cells) {
        for (int e = 0; e < 2; ++e) {
          for (int side : {1, -1}) {
            const int c = side > 0 ? cell.copy_plus[e] : cell.copy_minus[e];
            if (c != copy) continue;
            const int skin = side > 0 ? fm.skin_plus : fm.skin_minus;
            const double ss = s(G.dof(skin, cell.index));
            f += cell.length * ss * (e == 0 ? -1.0 : 1.0) / cell.length * fm.tangent(a);
            const double st = s(G.dof(r, cell.index, 0)), sn = s(G.dof(r, cell.index, 1));
            f += cell.length * 0.5 * side * (st * fm.tangent(a) + sn * fm.normal(a) / fm.aperture);
          }
        }
      }
    }
    return f;
  };

  double worst = 0.0;
  PoroState state = zero_state(model.sys);
  for (int k = 0; k < steps; ++k) {
    const ForcingValues f = forcing(state.t + cfg.dt);
    PoroState next = step(state, model.sys, f);
    const Vec s = next.pack().segment(model.sys.layout.off_s, model.sys.layout.ns);
    for (const auto& [skin, rs] : m.skin_side) {
      for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
        if (m.copies[c].owner != skin) continue;
        for (int a = 0; a < 2; ++a) {
          const int d = U.dof(skin, c, a);
          const double inertia = cfg.rho * U.weights(d) * (next.v.coeffs(d) - state.v.coeffs(d)) / cfg.dt;
          const double r = inertia + internal_force(s, c, a) - U.weights(d) * f.r_s(d);
          worst = std::max(worst, std::abs(r));
        }
      }
    }
    state = std::move(next);
  }
  return worst;
}

SuiteReport reduction_suite(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  SuiteReport rep;
  rep.name = "reductions";
  const TerzaghiRun tz = run_terzaghi(100, 200, 0.2);
  std::ostringstream d;
  d << "probe p=" << tz.probe_value << " ref=" << tz.probe_reference;
  rep.checks.push_back(at_most("(a) consolidation vs series", tz.max_rel_error, 0.02 * opt.tol_scale, d.str()));
  const ContactRun cr = run_signorini(40);
  std::ostringstream dc;
  dc << "open steps " << cr.open_steps << ", closed steps " << cr.closed_steps;
  rep.checks.push_back(at_most("(b) contact KKT residual", cr.max_kkt, 1e-8 * opt.tol_scale, dc.str()));
  rep.checks.push_back(at_least("(b) no interpenetration", cr.min_opening, -1e-10 * opt.tol_scale));
  rep.checks.push_back(at_most("(c) coated surface balance", coating_balance_residual(10), 1e-10 * opt.tol_scale));
  rep.seconds = seconds_since(t0);
  return rep;
}

}  // namespace mdpm
