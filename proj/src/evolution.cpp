#include "mdpm/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace mdpm {

namespace {

using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr double kJacobianFloor = 1e-8;

void add_block(Triplets& t, const SpMat& m, int row, int col) {
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) t.emplace_back(row + it.row(), col + it.col(), it.value());
  }
}

SpMat diagonal(const Vec& d) {
  SpMat m(d.size(), d.size());
  Triplets t;
  for (int i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double max_abs(const SpMat& m) {
  double mx = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
  }
  return mx;
}

Eigen::Matrix3d bulk_compliance_block(double mu, double lambda) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  const double a = lambda / (2.0 * mu + 2.0 * lambda);
  K(0, 0) = K(1, 1) = (1.0 - a) / (2.0 * mu);
  K(0, 1) = K(1, 0) = -a / (2.0 * mu);
  K(2, 2) = 1.0 / (2.0 * mu);
  return K;
}

}  // namespace

struct SolverCache {
  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  std::vector<double> last_values;
};

bool ForcingValues::is_zero() const {
  return r_s.cwiseAbs().maxCoeff() == 0.0 && (r_m.size() == 0 || r_m.cwiseAbs().maxCoeff() == 0.0) &&
         (r_g.size() == 0 || r_g.cwiseAbs().maxCoeff() == 0.0);
}

ForcingFn zero_forcing(const OperatorSet& ops) {
  ForcingValues z{Vec::Zero(ops.U->size()), Vec::Zero(ops.P->size()), Vec::Zero(ops.Q->size())};
  return [z](double) { return z; };
}

ForcingFn make_forcing(const ForcingSpec& load, const OperatorSet& ops) {
  const MdMesh& m = *ops.mesh;
  const SpacePtr& U = ops.U;
  Vec rs = Vec::Zero(U->size());
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    for (int a = 0; a < 2; ++a) rs(U->dof(m.copies[c].owner, c, a)) += load.body(a);
  }
  Vec nodal = Vec::Zero(U->size());
  for (const auto& e : m.edges) {
    if (e.kind != EdgeKind::boundary) continue;
    auto it = load.traction.find(e.boundary_index);
    if (it == load.traction.end()) continue;
    for (int v : e.v) {
      for (int c : m.vertex_copies[v]) {
        for (int a = 0; a < 2; ++a) nodal(U->dof(m.copies[c].owner, c, a)) += 0.5 * e.length * it->second(a);
      }
    }
  }
  rs += nodal.cwiseQuotient(U->weights);
  rs = rs.cwiseProduct(ops.mask_u);

  Vec rm = Vec::Zero(ops.P->size());
  if (load.source != 0.0) {
    double xmin = 1e300, xmax = -1e300;
    for (const auto& x : m.vertices) {
      xmin = std::min(xmin, x(0));
      xmax = std::max(xmax, x(0));
    }
    const double mid = 0.5 * (xmin + xmax);
    for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
      const double sign = load.source_zero_mean ? (m.tris[t].centroid(0) < mid ? -1.0 : 1.0) : 1.0;
      rm(ops.P->dof(m.bulk_root, t)) = sign * load.source;
    }
  }
  Vec rg = Vec::Zero(ops.Q->size());
  for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
    if (m.edges[e].kind == EdgeKind::fracture) continue;
    rg(ops.Q->dof(m.bulk_root, e)) = load.gravity.dot(m.edges[e].normal);
  }
  rg = rg.cwiseProduct(ops.mask_q);
  return [load, rs, rm, rg](double t) {
    const double a = load.envelope(t);
    return ForcingValues{a * rs, a * rm, a * rg};
  };
}

Vec PoroState::pack() const {
  Vec x(v.coeffs.size() + p.coeffs.size() + s.coeffs.size() + q.coeffs.size());
  Vec st = s.coeffs;
  if (fracture_traction.size() == st.size()) st += fracture_traction;
  x << v.coeffs, p.coeffs, st, q.coeffs;
  return x;
}

BlockSystem assemble_blocks(const ModelConfig& cfg, std::shared_ptr<const OperatorSet> ops_ptr) {
  const OperatorSet& o = *ops_ptr;
  const MdMesh& m = *o.mesh;
  const MdGeometry& g = *m.geom;
  BlockSystem sys;
  sys.cfg = cfg;
  sys.ops = ops_ptr;
  sys.dt = cfg.dt;
  sys.cache = std::make_shared<SolverCache>();
  Layout& L = sys.layout;
  L.nv = o.U->size();
  L.np = o.P->size();
  L.ns = o.G->size();
  L.nq = o.Q->size();
  L.off_p = L.nv;
  L.off_s = L.off_p + L.np;
  L.off_q = L.off_s + L.ns;
  sys.weights.resize(L.size());
  sys.weights << o.U->weights, o.P->weights, o.G->weights, o.Q->weights;

  const Vec& MU = o.U->weights;
  const Vec& MP = o.P->weights;
  const Vec& MG = o.G->weights;
  const Vec& MQ = o.Q->weights;

  sys.alpha_g = Vec::Zero(L.ns);
  sys.gamma_check = Vec::Zero(L.ns);
  for (int i = 0; i < L.ns; ++i) {
    const int node = o.G->dofs[i].node;
    const int root = g.dag_root(node);
    sys.alpha_g(i) = cfg.alpha.at(g, root);
    sys.gamma_check(i) = g.node(root).dim == g.ambient_dim - 1 ? 1.0 : 0.0;
  }
  sys.gamma_hat = Vec::Ones(L.ns) - sys.gamma_check;
  sys.beta_p.resize(L.np);
  for (int i = 0; i < L.np; ++i) sys.beta_p(i) = cfg.beta.at(g, o.P->dofs[i].node);
  sys.kappa1_q.resize(L.nq);
  sys.kappa2_q.resize(L.nq);
  for (int i = 0; i < L.nq; ++i) {
    sys.kappa1_q(i) = cfg.kappa1.at(g, o.Q->dofs[i].node);
    sys.kappa2_q(i) = cfg.kappa2.at(g, o.Q->dofs[i].node);
  }

  // Compliance: bulk blocks in (xx, yy, xy), skins scalar; none on fractures.
  Triplets at;
  const Eigen::Matrix3d K = bulk_compliance_block(cfg.mu, cfg.lambda);
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (K(a, b) != 0.0) at.emplace_back(o.G->dof(m.bulk_root, t, a), o.G->dof(m.bulk_root, t, b), K(a, b));
      }
    }
  }
  for (const auto& [skin, rs] : m.skin_side) {
    for (const auto& cell : m.fracture(rs.first).cells) {
      const int d = o.G->dof(skin, cell.index);
      if (cfg.coating) at.emplace_back(d, d, 1.0 / (2.0 * cfg.mu_skin + cfg.lambda_skin));
      else sys.fixed_rows.push_back(d);
    }
  }
  sys.Ahat = SpMat(L.ns, L.ns);
  sys.Ahat.setFromTriplets(at.begin(), at.end());
  sys.That = diag_scale(sys.gamma_hat, o.trace.matrix, Vec::Ones(L.np));

  const SpMat& Ds = o.symgrad_bc.matrix;
  const SpMat& Div = o.div_bc.matrix;
  const SpMat& Tp = o.trace_t.matrix;
  const SpMat aT = diag_scale(sys.alpha_g, sys.That, Vec::Ones(L.np));
  const SpMat MGA = diag_scale(MG, sys.Ahat, Vec::Ones(L.ns));
  const SpMat aTt = aT.transpose();

  Triplets t0;
  add_block(t0, diagonal(cfg.rho * MU), 0, 0);
  add_block(t0, SpMat(diagonal(MP.cwiseProduct(sys.beta_p)) + SpMat(aTt * MGA * aT)), L.off_p, L.off_p);
  add_block(t0, SpMat(aTt * MGA), L.off_p, L.off_s);
  add_block(t0, SpMat(MGA * aT), L.off_s, L.off_p);
  add_block(t0, MGA, L.off_s, L.off_s);
  sys.M0 = SpMat(L.size(), L.size());
  sys.M0.setFromTriplets(t0.begin(), t0.end());

  const Vec ag_check = sys.alpha_g.cwiseProduct(sys.gamma_check);
  const SpMat Dst = Ds.transpose();
  const SpMat Divt = Div.transpose();
  const SpMat Tpt = Tp.transpose();
  Triplets t1;
  add_block(t1, SpMat(-diag_scale(Vec::Ones(L.nv), SpMat(Dst * diag_scale(ag_check, Tpt, MP)), Vec::Ones(L.np))), 0, L.off_p);
  add_block(t1, diag_scale(Vec::Ones(L.nv), Dst, MG), 0, L.off_s);
  add_block(t1, SpMat(diag_scale(MP, Tp, ag_check) * Ds), L.off_p, 0);
  add_block(t1, diag_scale(MP, Div, Vec::Ones(L.nq)), L.off_p, L.off_q);
  add_block(t1, SpMat(-diag_scale(MG, Ds, Vec::Ones(L.nv))), L.off_s, 0);
  add_block(t1, SpMat(-diag_scale(Vec::Ones(L.nq), Divt, MP)), L.off_q, L.off_p);
  sys.A1 = SpMat(L.size(), L.size());
  sys.A1.setFromTriplets(t1.begin(), t1.end());

  Vec m1 = Vec::Zero(L.size());
  m1.segment(L.off_s, L.ns) = cfg.fracture.c_check * sys.gamma_check.cwiseProduct(MG);
  m1.segment(L.off_q, L.nq) = sys.kappa1_q.cwiseProduct(MQ);
  sys.M1 = diagonal(m1);

  // Fracture rows: tangential and normal law per cell.
  const double stiff = 2.0 * cfg.mu + 2.0 * cfg.lambda;
  for (const auto& [r, fm] : m.fractures) {
    for (const auto& cell : fm.cells) {
      for (int comp = 0; comp < 2; ++comp) {
        FractureRow row;
        row.dof = o.G->dof(r, cell.index, comp);
        row.root = r;
        row.cell = cell.index;
        row.comp = comp;
        RelationParams p = cfg.fracture;
        p.dim = g.ambient_dim;
        row.relation = MonotoneRelation(comp == 0 ? cfg.tangential : cfg.normal, p);
        row.strain_law = comp == 1 && cfg.normal == RelationLabel::signorini;
        const double base = stiff * fm.aperture / m.h;
        row.scale = row.strain_law ? base : base * cfg.dt;
        sys.fracture_rows.push_back(row);
      }
    }
  }

  Vec lin = Vec::Ones(L.size());
  for (const auto& row : sys.fracture_rows) lin(L.off_s + row.dof) = 0.0;
  for (int d : sys.fixed_rows) lin(L.off_s + d) = 0.0;
  sys.linear_rows = lin;
  const SpMat A = SpMat(sys.M0 / cfg.dt) + sys.A1;
  sys.step_matrix = diag_scale(lin, A, Vec::Ones(L.size())).pruned(1e-300);
  sys.symgrad_rows = RowMat(Ds);
  return sys;
}

PoroState zero_state(const BlockSystem& sys) {
  const OperatorSet& o = *sys.ops;
  PoroState s;
  s.v = MdFunction(o.U);
  s.p = MdFunction(o.P);
  s.s = MdFunction(o.G);
  s.q = MdFunction(o.Q);
  s.u = MdFunction(o.U);
  if (sys.cfg.formulation == Formulation::degenerate) s.fracture_traction = Vec::Zero(o.G->size());
  return s;
}

PoroState unpack(const BlockSystem& sys, const Vec& x, const PoroState& prev) {
  const Layout& L = sys.layout;
  const OperatorSet& o = *sys.ops;
  PoroState s;
  s.t = prev.t + sys.dt;
  s.v = MdFunction(o.U, x.segment(0, L.nv));
  s.p = MdFunction(o.P, x.segment(L.off_p, L.np));
  s.s = MdFunction(o.G, x.segment(L.off_s, L.ns));
  s.q = MdFunction(o.Q, x.segment(L.off_q, L.nq));
  s.u = MdFunction(o.U, prev.u.coeffs + sys.dt * s.v.coeffs);
  if (sys.cfg.formulation == Formulation::degenerate) {
    s.fracture_traction = Vec::Zero(L.ns);
    for (const auto& row : sys.fracture_rows) {
      s.fracture_traction(row.dof) = s.s.coeffs(row.dof);
      s.s.coeffs(row.dof) = 0.0;
    }
  }
  return s;
}

namespace {

struct StepProblem {
  const BlockSystem& sys;
  Vec rhs;                         // linear-row right-hand side
  Vec e0;                          // strain at the start of the step
  std::vector<MonotoneRelation> relations;
  bool frozen = false;
  Vec sigma_target;                // fracture tractions held fixed in the splitting iteration

  double norm(const Vec& r) const { return std::sqrt((r.array().square() / sys.weights.array()).sum()); }

  double y_of(const FractureRow& row, const Vec& x) const {
    double rate = 0.0;
    for (RowMat::InnerIterator it(sys.symgrad_rows, row.dof); it; ++it) rate += it.value() * x(it.col());
    return row.strain_law ? e0(row.dof) + sys.dt * rate : rate;
  }

  Vec residual(const Vec& x, Triplets* jac) const {
    const Layout& L = sys.layout;
    const OperatorSet& o = *sys.ops;
    Vec r = sys.step_matrix * x - rhs;
    const Vec& MQ = o.Q->weights;
    for (int i = 0; i < L.nq; ++i) {
      const double q = x(L.off_q + i);
      const double k1 = sys.kappa1_q(i), k2 = sys.kappa2_q(i);
      r(L.off_q + i) += MQ(i) * (k1 + k2 * std::abs(q)) * q;
      if (jac) jac->emplace_back(L.off_q + i, L.off_q + i, MQ(i) * (k1 + 2.0 * k2 * std::abs(q)));
    }
    const Vec& MG = o.G->weights;
    for (int d : sys.fixed_rows) {
      r(L.off_s + d) = MG(d) * x(L.off_s + d);
      if (jac) jac->emplace_back(L.off_s + d, L.off_s + d, MG(d));
    }
    for (std::size_t k = 0; k < sys.fracture_rows.size(); ++k) {
      const FractureRow& row = sys.fracture_rows[k];
      const int gi = L.off_s + row.dof;
      const double w = MG(row.dof), c = row.scale, sigma = x(gi);
      double res, dsig, dy;
      if (frozen) {
        res = sigma - sigma_target(k);
        dsig = 1.0;
        dy = 0.0;
      } else {
        const double arg = sigma + c * y_of(row, x);
        Eigen::VectorXd wv = Eigen::VectorXd::Constant(1, arg);
        const double s_r = relations[k].resolvent(wv, c).first(0);
        const double jr = relations[k].resolvent_jacobian(wv, c)(0, 0);
        res = sigma - s_r;
        // A fracture with m cells carries m tractions but only m - 1 interior jump dofs, so
        // the exact Jacobian is singular once every cell is stuck or closed.  The floor only
        // perturbs the Newton matrix; the residual and its root are unchanged.
        dsig = std::max(1.0 - jr, kJacobianFloor);
        dy = -jr * c;
      }
      r(gi) = w * res / c;
      if (jac) {
        jac->emplace_back(gi, gi, w * dsig / c);
        const double f = row.strain_law ? sys.dt : 1.0;
        for (RowMat::InnerIterator it(sys.symgrad_rows, row.dof); it; ++it) {
          jac->emplace_back(gi, it.col(), w * dy / c * f * it.value());
        }
      }
    }
    return r;
  }

  // Semismooth Newton with backtracking; returns true on convergence.
  bool newton(Vec& x, double tol_abs, double tol_rel, int max_iter, StepStats& stats, double ref) const {
    SolverCache& cache = *sys.cache;
    Triplets jt;
    Vec r = residual(x, &jt);
    double rn = norm(r);
    stats.residual_history.push_back(rn);
    const double target = std::max(tol_abs, tol_rel * ref);
    for (int it = 0; it < max_iter; ++it) {
      if (rn <= target) {
        stats.residual = rn;
        return true;
      }
      SpMat N(x.size(), x.size());
      N.setFromTriplets(jt.begin(), jt.end());
      SpMat J = sys.step_matrix + N;
      J.makeCompressed();
      if (!cache.analyzed) {
        cache.lu.analyzePattern(J);
        cache.analyzed = true;
      }
      std::vector<double> vals(J.valuePtr(), J.valuePtr() + J.nonZeros());
      if (vals != cache.last_values) {
        cache.lu.factorize(J);
        ++stats.factorizations;
        if (cache.lu.info() != Eigen::Success) {
          cache.last_values.clear();
          stats.failure = "factorization failed: " + cache.lu.lastErrorMessage();
          return false;
        }
        cache.last_values = std::move(vals);
      }
      const Vec dx = cache.lu.solve(-r);
      if (!dx.allFinite()) {
        stats.failure = "non-finite Newton update";
        return false;
      }
      double lam = 1.0;
      Vec xn;
      Vec rnew;
      Triplets jn;
      double rnn = 0.0;
      while (true) {
        xn = x + lam * dx;
        jn.clear();
        rnew = residual(xn, &jn);
        rnn = norm(rnew);
        if (rnn <= (1.0 - 1e-4 * lam) * rn || lam < 1.0 / 64.0) break;
        lam *= 0.5;
      }
      x = xn;
      r = rnew;
      jt = std::move(jn);
      rn = rnn;
      ++stats.newton_iterations;
      stats.residual_history.push_back(rn);
    }
    stats.residual = rn;
    return rn <= target;
  }
};

}  // namespace

PoroState step(const PoroState& state, const BlockSystem& sys, const ForcingValues& f, StepStats* stats_out) {
  StepStats local;
  StepStats& stats = stats_out ? *stats_out : local;
  stats = StepStats{};
  const Layout& L = sys.layout;
  const OperatorSet& o = *sys.ops;
  const Vec x0 = state.pack();
  const Vec F = forcing_pack(sys, f);

  StepProblem prob{sys, sys.linear_rows.cwiseProduct(Vec(sys.M0 * x0 / sys.dt + F)), o.symgrad_bc.apply(state.u.coeffs), {}, false, {}};
  prob.relations.reserve(sys.fracture_rows.size());
  for (const auto& row : sys.fracture_rows) {
    MonotoneRelation rel = row.relation;
    if (sys.cfg.coulomb && row.comp == 0) {
      const int perp = o.G->dof(row.root, row.cell, 1);
      rel.params.tau = sys.cfg.friction_coefficient * std::max(0.0, -x0(L.off_s + perp));
    }
    prob.relations.push_back(rel);
  }

  Vec x = x0;
  const double ref = std::max(prob.norm(prob.residual(x0, nullptr)), prob.norm(F));
  bool ok = prob.newton(x, 1e-10, 1e-8, 50, stats, ref);
  if (!ok) {
    // Resolvent splitting: freeze the fracture tractions, solve the rest, relax towards the
    // resolvent of the updated argument.
    stats.fallback = true;
    x = x0;
    const int nf = static_cast<int>(sys.fracture_rows.size());
    Vec sigma(nf);
    for (int k = 0; k < nf; ++k) sigma(k) = x(L.off_s + sys.fracture_rows[k].dof);
    StepProblem frozen = prob;
    frozen.frozen = true;
    bool converged = false;
    for (int it = 0; it < 500 && !converged; ++it) {
      frozen.sigma_target = sigma;
      StepStats inner;
      if (!frozen.newton(x, 1e-12, 1e-12, 50, inner, ref)) break;
      double diff = 0.0, mag = 0.0;
      for (int k = 0; k < nf; ++k) {
        const FractureRow& row = sys.fracture_rows[k];
        const double arg = sigma(k) + row.scale * prob.y_of(row, x);
        const double s_new = prob.relations[k].resolvent(Eigen::VectorXd::Constant(1, arg), row.scale).first(0);
        diff = std::max(diff, std::abs(s_new - sigma(k)));
        mag = std::max(mag, std::abs(s_new));
        sigma(k) = 0.5 * sigma(k) + 0.5 * s_new;
      }
      ++stats.fixed_point_iterations;
      converged = diff <= 1e-10 * (1.0 + mag);
    }
    for (int k = 0; k < nf; ++k) x(L.off_s + sys.fracture_rows[k].dof) = sigma(k);
    stats.residual = prob.norm(prob.residual(x, nullptr));
    if (!converged) {
      std::ostringstream os;
      os << "step at t=" << state.t + sys.dt << " failed: Newton residual history";
      for (double r : stats.residual_history) os << ' ' << r;
      if (!stats.failure.empty()) os << " (" << stats.failure << ")";
      os << "; splitting did not converge in " << stats.fixed_point_iterations << " iterations";
      throw SolverError(os.str());
    }
  }
  for (std::size_t k = 0; k < sys.fracture_rows.size(); ++k) {
    const FractureRow& row = sys.fracture_rows[k];
    if (row.strain_law) continue;
    const double arg = x(L.off_s + row.dof) + row.scale * prob.y_of(row, x);
    const auto [s_r, rate] = prob.relations[k].resolvent(Eigen::VectorXd::Constant(1, arg), row.scale);
    if (std::abs(rate(0)) >= 0.99 * sys.cfg.fracture.c_inf) stats.rate_cap_warning = true;
  }
  return unpack(sys, x, state);
}

Trajectory simulate(const BlockSystem& sys, const ForcingFn& forcing, int steps, const std::optional<PoroState>& initial,
                    const StepObserver& observer) {
  Trajectory traj;
  traj.states.push_back(initial ? *initial : zero_state(sys));
  traj.forcing.push_back(forcing(traj.states.back().t));
  traj.stats.emplace_back();
  bool warned = false;
  for (int k = 0; k < steps; ++k) {
    const PoroState& prev = traj.states.back();
    const ForcingValues f = forcing(prev.t + sys.dt);
    StepStats st;
    PoroState next = step(prev, sys, f, &st);
    if (st.rate_cap_warning && !warned) {
      std::cerr << "warning: a fracture rate reached 0.99 c_inf at t=" << next.t << "; increase c_inf\n";
      warned = true;
    }
    if (observer) observer(next, st, k + 1);
    traj.states.push_back(std::move(next));
    traj.forcing.push_back(f);
    traj.stats.push_back(st);
  }
  return traj;
}

Model build_model(const ModelConfig& cfg) {
  Model m;
  m.geom = std::make_shared<const MdGeometry>(load_geometry(resolve_data_path(cfg.geometry_file)));
  m.mesh = std::make_shared<const MdMesh>(build_mesh(m.geom, cfg.h));
  m.ops = std::make_shared<const OperatorSet>(assemble_operators(m.mesh, cfg.bc));
  m.sys = assemble_blocks(cfg, m.ops);
  return m;
}

double state_norm_sq(const BlockSystem& sys, const Vec& x) { return (x.array().square() * sys.weights.array()).sum(); }

Vec forcing_pack(const BlockSystem& sys, const ForcingValues& f) {
  const Layout& L = sys.layout;
  const OperatorSet& o = *sys.ops;
  Vec F = Vec::Zero(L.size());
  F.segment(0, L.nv) = f.r_s.cwiseProduct(o.U->weights);
  F.segment(L.off_p, L.np) = f.r_m.cwiseProduct(o.P->weights);
  F.segment(L.off_q, L.nq) = f.r_g.cwiseProduct(o.Q->weights);
  return F;
}

namespace {

double trapezoid(const std::vector<double>& t, const std::vector<double>& y, double nu) {
  double sum = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double a = std::exp(-2.0 * nu * t[k - 1]) * y[k - 1];
    const double b = std::exp(-2.0 * nu * t[k]) * y[k];
    sum += 0.5 * (t[k] - t[k - 1]) * (a + b);
  }
  return sum;
}

}  // namespace

double weighted_norm(const Trajectory& traj, const BlockSystem& sys, double nu) {
  if (!(nu > 0.0)) throw Error("weighted norm needs nu > 0");
  std::vector<double> t, y;
  for (const auto& s : traj.states) {
    t.push_back(s.t);
    y.push_back(state_norm_sq(sys, s.pack()));
  }
  return trapezoid(t, y, nu);
}

double weighted_forcing_norm(const Trajectory& traj, const BlockSystem& sys, double nu) {
  std::vector<double> t, y;
  const Layout& L = sys.layout;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    t.push_back(traj.states[k].t);
    const ForcingValues& f = traj.forcing[k];
    Vec x = Vec::Zero(L.size());
    x.segment(0, L.nv) = f.r_s;
    x.segment(L.off_p, L.np) = f.r_m;
    x.segment(L.off_q, L.nq) = f.r_g;
    y.push_back(state_norm_sq(sys, x));
  }
  return trapezoid(t, y, nu);
}

std::optional<double> bound_check(const Trajectory& traj, const BlockSystem& sys, double nu) {
  const double fn = weighted_forcing_norm(traj, sys, nu);
  if (!(fn > 0.0)) return std::nullopt;
  return std::sqrt(weighted_norm(traj, sys, nu) / fn);
}

Vec fluid_mass(const PoroState& state, const BlockSystem& sys) {
  const OperatorSet& o = *sys.ops;
  const Vec& s = state.s.coeffs;
  const Vec& p = state.p.coeffs;
  const Vec stress = s + sys.alpha_g.cwiseProduct(sys.That * p);
  const Vec hat = sys.gamma_hat.cwiseProduct(sys.alpha_g).cwiseProduct(sys.Ahat * stress);
  const Vec check = sys.gamma_check.cwiseProduct(sys.alpha_g).cwiseProduct(o.symgrad_bc.apply(state.u.coeffs));
  return o.trace_t.apply(hat + check) + sys.beta_p.cwiseProduct(p);
}

double total_fluid_mass(const PoroState& state, const BlockSystem& sys) {
  return sys.ops->P->weights.dot(fluid_mass(state, sys));
}

double energy(const PoroState& state, const BlockSystem& sys) {
  const Vec x = state.pack();
  return 0.5 * x.dot(sys.M0 * x);
}

double skew_residual(const BlockSystem& sys) { return max_abs(SpMat(sys.A1 + SpMat(sys.A1.transpose()))); }

double symmetry_residual(const BlockSystem& sys) { return max_abs(SpMat(sys.M0 - SpMat(sys.M0.transpose()))); }

ContactReport contact_report(const PoroState& state, const BlockSystem& sys) {
  const OperatorSet& o = *sys.ops;
  const Vec e = o.symgrad_bc.apply(state.u.coeffs);
  const Vec s = state.pack().segment(sys.layout.off_s, sys.layout.ns);
  ContactReport rep;
  rep.min_opening = 1e300;
  for (const auto& row : sys.fracture_rows) {
    if (row.comp != 1) continue;
    const double sig = s(row.dof), en = e(row.dof);
    rep.kkt = std::max(rep.kkt, std::abs(sig * en) + std::max(sig, 0.0) + std::max(-en, 0.0));
    rep.min_opening = std::min(rep.min_opening, en);
    if (en > 0.0) ++rep.open_cells; else ++rep.closed_cells;
  }
  if (rep.min_opening == 1e300) rep.min_opening = 0.0;
  return rep;
}

}  // namespace mdpm
