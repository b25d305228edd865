#include "mdpm/strain.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace mdpm {

namespace {

Vec2 rot90(const Vec2& v) { return Vec2(-v(1), v(0)); }

int copy_side(const MdMesh& m, int copy) {
  auto it = m.skin_side.find(m.copies[copy].owner);
  return it == m.skin_side.end() ? 0 : it->second.second;
}

Vec2 copy_position(const Configuration& c, const MdMesh& m, int copy) {
  return c.position(m.copies[copy].owner, copy);
}

// Side polylines of a fracture, vertex by vertex along the tangent.
std::vector<int> side_copies(const FractureMesh& fm, int side) {
  std::vector<int> out;
  for (const auto& cell : fm.cells) out.push_back(side > 0 ? cell.copy_plus[0] : cell.copy_minus[0]);
  out.push_back(side > 0 ? fm.cells.back().copy_plus[1] : fm.cells.back().copy_minus[1]);
  return out;
}

std::vector<Vec> polyline(const Configuration& c, const MdMesh& m, const std::vector<int>& copies) {
  std::vector<Vec> out;
  for (int cp : copies) out.push_back(copy_position(c, m, cp));
  return out;
}

Mat2 bulk_gradient(const Configuration& c, const MdMesh& m, int tri) {
  auto it = c.bulk_F.find(tri);
  if (it != c.bulk_F.end()) return it->second;
  const auto& t = m.tris[tri];
  Mat2 g = Mat2::Zero();
  for (int k = 0; k < 3; ++k) g += copy_position(c, m, t.copy[k]) * t.grad.row(k);
  return g;
}

struct CellJump {
  Vec2 g, g_ref;     // deformed and baseline jumps at the paired points
  Vec2 n, n_ref;     // deformed and baseline normals of the mean surface
  Vec2 t_ref;
  double stretch = 1.0;  // deformed / reference length of the mean surface
};

std::vector<CellJump> fracture_jumps(const Configuration& phi, const Configuration& base, const MdMesh& m,
                                     const FractureMesh& fm) {
  const auto plus_ids = side_copies(fm, 1);
  const auto minus_ids = side_copies(fm, -1);
  const auto plus = polyline(phi, m, plus_ids), minus = polyline(phi, m, minus_ids);
  const auto plus_ref = polyline(base, m, plus_ids), minus_ref = polyline(base, m, minus_ids);
  const double orient = rot90(fm.tangent).dot(fm.normal) >= 0.0 ? 1.0 : -1.0;
  std::vector<CellJump> out;
  for (std::size_t k = 0; k < fm.cells.size(); ++k) {
    const Vec2 a0 = 0.5 * (plus[k] + minus[k]), a1 = 0.5 * (plus[k + 1] + minus[k + 1]);
    const Vec2 b0 = 0.5 * (plus_ref[k] + minus_ref[k]), b1 = 0.5 * (plus_ref[k + 1] + minus_ref[k + 1]);
    const Vec mid = 0.5 * (a0 + a1);
    const Projection pp = project_onto_polyline(mid, plus);
    const Projection pm = project_onto_polyline(mid, minus);
    auto preimage = [](const std::vector<Vec>& ref, const Projection& p) -> Vec2 {
      if (ref.size() == 1) return ref[0];
      return (1.0 - p.theta) * ref[p.segment] + p.theta * ref[p.segment + 1];
    };
    CellJump j;
    j.g = pp.point - pm.point;
    j.g_ref = preimage(plus_ref, pp) - preimage(minus_ref, pm);
    const Vec2 t = (a1 - a0).normalized();
    j.t_ref = (b1 - b0).normalized();
    j.n = orient * rot90(t);
    j.n_ref = orient * rot90(j.t_ref);
    j.stretch = (a1 - a0).norm() / (b1 - b0).norm();
    out.push_back(j);
  }
  return out;
}

}  // namespace

Vec2 Configuration::position(int owner, int entity) const {
  const int d = X->dof(owner, entity, 0);
  return Vec2(x(d), x(d + 1));
}

Configuration reference_configuration(const OperatorSet& ops) {
  Configuration c = configuration_from_map(ops, [](const Vec2& x, int) { return x; });
  c.baseline = true;
  return c;
}

Configuration configuration_from_map(const OperatorSet& ops, const PointMap& phi, const JacobianMap& dphi) {
  const MdMesh& m = *ops.mesh;
  Configuration c;
  c.X = ops.X;
  // Ξ fills lower-dimensional positions with the mean of the copies at each grid vertex.
  Vec u(ops.U->size());
  for (int cp = 0; cp < static_cast<int>(m.copies.size()); ++cp) {
    const Vec2 y = phi(m.vertices[m.copies[cp].vertex], copy_side(m, cp));
    const int d = ops.U->dof(m.copies[cp].owner, cp, 0);
    u(d) = y(0);
    u(d + 1) = y(1);
  }
  c.x = ops.extension.apply(u);
  if (dphi) {
    for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) c.bulk_F[t] = dphi(m.tris[t].centroid);
  }
  return c;
}

Configuration perturbed(const Configuration& base, const OperatorSet& ops, const MdFunction& u, double eps) {
  if (u.space->kind != SpaceKind::Vector) throw SpaceError("perturbation must be a vector function");
  Configuration c;
  c.X = base.X;
  const Vec xu = ops.extension.apply(u.coeffs);
  c.x = base.x + eps * xu;
  if (!base.bulk_F.empty()) {
    Configuration du;
    du.X = base.X;
    du.x = xu;
    for (const auto& [t, F] : base.bulk_F) c.bulk_F[t] = F + eps * bulk_gradient(du, *ops.mesh, t);
  }
  return c;
}

MdFunction finite_strain(const Configuration& phi, const Configuration& base, const OperatorSet& ops) {
  const MdMesh& m = *ops.mesh;
  const MdGeometry& g = *m.geom;
  const SpacePtr& G = ops.G;
  MdFunction e(G);
  Mat frame = g.node(m.bulk_root).frame.tangents;
  const Mat2 Fb = frame.topLeftCorner<2, 2>();
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    const Mat2 F = bulk_gradient(phi, m, t) * Fb;
    const Mat2 Fr = bulk_gradient(base, m, t) * Fb;
    const Mat2 E = 0.5 * (F.transpose() * F - Fr.transpose() * Fr);
    e.coeffs(G->dof(m.bulk_root, t, 0)) = E(0, 0);
    e.coeffs(G->dof(m.bulk_root, t, 1)) = E(1, 1);
    e.coeffs(G->dof(m.bulk_root, t, 2)) = E(0, 1);
  }
  for (const auto& [r, fm] : m.fractures) {
    for (int side : {1, -1}) {
      const int skin = side > 0 ? fm.skin_plus : fm.skin_minus;
      for (const auto& cell : fm.cells) {
        const auto& cp = side > 0 ? cell.copy_plus : cell.copy_minus;
        const Vec2 f = (copy_position(phi, m, cp[1]) - copy_position(phi, m, cp[0])) / cell.length;
        const Vec2 fr = (copy_position(base, m, cp[1]) - copy_position(base, m, cp[0])) / cell.length;
        e.coeffs(G->dof(skin, cell.index)) = 0.5 * (f.squaredNorm() - fr.squaredNorm());
      }
    }
    const auto jumps = fracture_jumps(phi, base, m, fm);
    for (const auto& cell : fm.cells) {
      const CellJump& j = jumps[cell.index];
      e.coeffs(G->dof(r, cell.index, 0)) = -j.t_ref.dot(j.g_ref);
      e.coeffs(G->dof(r, cell.index, 1)) = (j.n.dot(j.g) - j.n_ref.dot(j.g_ref)) / fm.aperture;
    }
  }
  return e;
}

MdFunction volume_density(const Configuration& phi, const OperatorSet& ops) {
  const MdMesh& m = *ops.mesh;
  const MdGeometry& g = *m.geom;
  const SpacePtr& P = ops.P;
  MdFunction vol(P);
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    const double det = bulk_gradient(phi, m, t).determinant();
    if (!(det > 0.0)) throw StrainError("inverted bulk triangle " + std::to_string(t));
    vol.coeffs(P->dof(m.bulk_root, t)) = det;
  }
  // The reference positions of the copies are the grid vertices.
  Configuration ref;
  ref.X = phi.X;
  ref.x = Vec::Zero(phi.x.size());
  for (int cp = 0; cp < static_cast<int>(m.copies.size()); ++cp) {
    const int d = phi.X->dof(m.copies[cp].owner, cp, 0);
    ref.x.segment<2>(d) = m.vertices[m.copies[cp].vertex];
  }
  std::map<int, double> point_sum;
  for (const auto& [r, fm] : m.fractures) {
    const auto jumps = fracture_jumps(phi, ref, m, fm);
    const double l = fm.aperture;
    for (const auto& cell : fm.cells) {
      const CellJump& j = jumps[cell.index];
      const double v = l * (1.0 + g.omega(r, r) * j.n.dot(j.g) / l) * j.stretch;
      if (!(v > 0.0)) throw StrainError("non-positive fracture volume on node " + std::to_string(r));
      vol.coeffs(P->dof(r, cell.index)) = v;
    }
    point_sum[fm.start_root] += g.omega(fm.start_root, r) * jumps.front().n.dot(jumps.front().g) / l;
    point_sum[fm.end_root] += g.omega(fm.end_root, r) * jumps.back().n.dot(jumps.back().g) / l;
  }
  for (const auto& [i, pc] : m.points) {
    const double l = g.node(i).aperture;
    const double v = l * l * (1.0 + point_sum[i]);
    if (!(v > 0.0)) throw StrainError("non-positive intersection volume on node " + std::to_string(i));
    vol.coeffs(P->dof(i, 0)) = v;
  }
  return vol;
}

MdFunction linearized_strain(const MdFunction& u, const OperatorSet& ops) { return ops.symgrad(u); }

MdFunction linearized_volume(const MdFunction& u, const OperatorSet& ops) {
  const MdFunction vol0 = volume_density(reference_configuration(ops), ops);
  const MdFunction tr = ops.trace_t(ops.symgrad(u));
  return MdFunction(ops.P, vol0.coeffs.cwiseProduct(tr.coeffs));
}

MdFunction linearized_volume_direct(const MdFunction& u, const OperatorSet& ops) {
  const MdMesh& m = *ops.mesh;
  const MdGeometry& g = *m.geom;
  const SpacePtr& U = ops.U;
  auto val = [&](int cp) {
    const int d = U->dof(m.copies[cp].owner, cp, 0);
    return Vec2(u.coeffs(d), u.coeffs(d + 1));
  };
  MdFunction out(ops.P);
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    const auto& tri = m.tris[t];
    double div = 0.0;
    for (int k = 0; k < 3; ++k) div += val(tri.copy[k]).dot(tri.grad.row(k).transpose());
    out.coeffs(ops.P->dof(m.bulk_root, t)) = div;
  }
  std::map<int, double> point_sum;
  for (const auto& [r, fm] : m.fractures) {
    const double l = fm.aperture;
    std::vector<double> opening;
    for (const auto& cell : fm.cells) {
      const Vec2 jump = 0.5 * (val(cell.copy_plus[0]) + val(cell.copy_plus[1]) - val(cell.copy_minus[0]) - val(cell.copy_minus[1]));
      const double stretch_plus = fm.tangent.dot(val(cell.copy_plus[1]) - val(cell.copy_plus[0])) / cell.length;
      const double stretch_minus = fm.tangent.dot(val(cell.copy_minus[1]) - val(cell.copy_minus[0])) / cell.length;
      opening.push_back(fm.normal.dot(jump));
      out.coeffs(ops.P->dof(r, cell.index)) = g.omega(r, r) * opening.back() + 0.5 * l * (stretch_plus + stretch_minus);
    }
    point_sum[fm.start_root] += g.omega(fm.start_root, r) * opening.front() / l;
    point_sum[fm.end_root] += g.omega(fm.end_root, r) * opening.back() / l;
  }
  for (const auto& [i, pc] : m.points) {
    const double l = g.node(i).aperture;
    out.coeffs(ops.P->dof(i, 0)) = l * l * point_sum[i];
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConsistencyReport linearization_consistency(const OperatorSet& ops, const MdFunction& u, const std::vector<double>& eps) {
  const Configuration base = reference_configuration(ops);
  const MdFunction e_lin = linearized_strain(u, ops);
  const MdFunction j_lin = linearized_volume(u, ops);
  const MdFunction vol0 = volume_density(base, ops);
  ConsistencyReport rep;
  for (double ep : eps) {
    const Configuration phi = perturbed(base, ops, u, ep);
    const MdFunction E = finite_strain(phi, base, ops);
    const MdFunction J = volume_density(phi, ops);
    rep.eps.push_back(ep);
    rep.r.push_back(norm(E - ep * e_lin));
    rep.s.push_back(norm(J - vol0 - ep * j_lin));
  }
  rep.slope_r = loglog_slope(rep.eps, rep.r);
  rep.slope_s = loglog_slope(rep.eps, rep.s);
  return rep;
}

std::string ConsistencyReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(12) << "eps,r,s\n";
  for (std::size_t i = 0; i < eps.size(); ++i) os << eps[i] << ',' << r[i] << ',' << s[i] << '\n';
  os << "# slope_r=" << slope_r << " slope_s=" << slope_s << '\n';
  return os.str();
}

}  // namespace mdpm
