#include "mdpm/operators.hpp"

#include <cmath>
#include <fstream>

#include <unsupported/Eigen/SparseExtra>

namespace mdpm {

namespace {

SpMat from_triplets(int rows, int cols, const Triplets& t) {
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.prune(0.0);
  return m;
}

MdOperator make(SpacePtr dom, SpacePtr cod, const Triplets& t, std::string name) {
  MdOperator op;
  op.domain = dom;
  op.codomain = cod;
  op.matrix = from_triplets(cod->size(), dom->size(), t);
  op.name = std::move(name);
  return op;
}

void require(const SpacePtr& s, SpaceKind kind, const char* what) {
  if (s->kind != kind) throw SpaceError(std::string(what) + ": expected a " + to_string(kind) + " space");
}

}  // namespace

SpMat diag_scale(const Vec& rows, const SpMat& a, const Vec& cols) {
  SpMat out = a;
  for (int k = 0; k < out.outerSize(); ++k) {
    for (SpMat::InnerIterator it(out, k); it; ++it) it.valueRef() *= rows(it.row()) * cols(it.col());
  }
  return out;
}

Vec MdOperator::apply(const Vec& x) const {
  if (x.size() != matrix.cols()) throw SpaceError(name + ": argument length mismatch");
  return matrix * x;
}

MdFunction MdOperator::operator()(const MdFunction& f) const {
  if (f.space != domain) throw SpaceError(name + ": function is not in the operator domain");
  return MdFunction(codomain, matrix * f.coeffs);
}

MechBC BoundaryConditions::mech_on(int edge) const {
  auto it = mech.find(edge);
  return it == mech.end() ? MechBC::clamped : it->second;
}

FlowBC BoundaryConditions::flow_on(int edge) const {
  auto it = flow.find(edge);
  return it == flow.end() ? FlowBC::noflow : it->second;
}

MechBC parse_mech_bc(const std::string& s) {
  if (s == "clamped") return MechBC::clamped;
  if (s == "roller") return MechBC::roller;
  if (s == "free") return MechBC::free;
  throw ConfigError("unknown mechanical boundary condition '" + s + "'");
}

FlowBC parse_flow_bc(const std::string& s) {
  if (s == "noflow") return FlowBC::noflow;
  if (s == "drained") return FlowBC::drained;
  throw ConfigError("unknown flow boundary condition '" + s + "'");
}

Vec displacement_mask(const MdSpace& U, const BoundaryConditions& bc) {
  if (U.kind != SpaceKind::Vector) throw SpaceError("displacement_mask: expected a vector space");
  const MdMesh& m = *U.mesh;
  const int n = m.geom->ambient_dim;
  Vec mask = Vec::Ones(U.size());
  for (const auto& e : m.edges) {
    if (e.kind != EdgeKind::boundary) continue;
    MechBC kind = bc.mech_on(e.boundary_index);
    if (kind == MechBC::free) continue;
    for (int v : e.v) {
      for (int c : m.vertex_copies[v]) {
        const int owner = m.copies[c].owner;
        for (int a = 0; a < n; ++a) {
          if (kind == MechBC::clamped || std::abs(e.normal(a)) > 0.5) mask(U.dof(owner, c, a)) = 0.0;
        }
      }
    }
  }
  return mask;
}

Vec flux_mask(const MdSpace& Q, const BoundaryConditions& bc) {
  const MdMesh& m = *Q.mesh;
  Vec mask = Vec::Ones(Q.size());
  for (int i = 0; i < static_cast<int>(m.edges.size()); ++i) {
    const MeshEdge& e = m.edges[i];
    if (e.kind == EdgeKind::boundary && bc.flow_on(e.boundary_index) == FlowBC::noflow) {
      mask(Q.dof(m.bulk_root, i)) = 0.0;
    }
  }
  return mask;
}

MdOperator assemble_local_gradient(SpacePtr U, SpacePtr E) {
  require(U, SpaceKind::Vector, "gradient");
  require(E, SpaceKind::Tensor, "gradient");
  const MdMesh& m = *U->mesh;
  const MdGeometry& g = *m.geom;
  const int n = g.ambient_dim;
  Triplets t;
  const Mat& Fb = g.node(m.bulk_root).frame.tangents;
  for (int ti = 0; ti < static_cast<int>(m.tris.size()); ++ti) {
    const auto& tri = m.tris[ti];
    for (int corner = 0; corner < 3; ++corner) {
      const int c = tri.copy[corner];
      const int owner = m.copies[c].owner;
      const Vec2 gl = tri.grad.row(corner).transpose();
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double w = gl.dot(Fb.col(b).head<2>());
          t.emplace_back(E->dof(m.bulk_root, ti, a * n + b), U->dof(owner, c, a), w);
        }
      }
    }
  }
  // Tangential derivative of the boundary traces on the skins.
  for (const auto& [r, fm] : m.fractures) {
    for (int side : {1, -1}) {
      const int skin = side > 0 ? fm.skin_plus : fm.skin_minus;
      for (const auto& cell : fm.cells) {
        const auto& cp = side > 0 ? cell.copy_plus : cell.copy_minus;
        for (int a = 0; a < n; ++a) {
          const int row = E->dof(skin, cell.index, a);
          t.emplace_back(row, U->dof(m.copies[cp[1]].owner, cp[1], a), 1.0 / cell.length);
          t.emplace_back(row, U->dof(m.copies[cp[0]].owner, cp[0], a), -1.0 / cell.length);
        }
      }
    }
  }
  return make(U, E, t, "local gradient");
}

MdOperator assemble_jump_vector(SpacePtr U, SpacePtr E) {
  require(U, SpaceKind::Vector, "jump");
  require(E, SpaceKind::Tensor, "jump");
  const MdMesh& m = *U->mesh;
  const int n = m.geom->ambient_dim;
  Triplets t;
  // (-1)^{n-k} = +1 for k = 0 with n = 2; sides enter with +1 (positive) and -1 (negative),
  // averaged over the two cell ends.
  for (const auto& [r, fm] : m.fractures) {
    for (const auto& cell : fm.cells) {
      for (int e = 0; e < 2; ++e) {
        for (int a = 0; a < n; ++a) {
          const int row = E->dof(r, cell.index, a);
          t.emplace_back(row, U->dof(m.copies[cell.copy_plus[e]].owner, cell.copy_plus[e], a), 0.5);
          t.emplace_back(row, U->dof(m.copies[cell.copy_minus[e]].owner, cell.copy_minus[e], a), -0.5);
        }
      }
    }
  }
  return make(U, E, t, "jump (k=0)");
}

MdOperator assemble_gradient(SpacePtr U, SpacePtr E) {
  MdOperator a = assemble_local_gradient(U, E);
  MdOperator b = assemble_jump_vector(U, E);
  a.matrix += b.matrix;
  a.matrix.prune(0.0);
  a.name = "gradient";
  return a;
}

MdOperator assemble_local_divergence(SpacePtr Q, SpacePtr P) {
  require(Q, SpaceKind::Flux, "divergence");
  require(P, SpaceKind::Density, "divergence");
  const MdMesh& m = *Q->mesh;
  Triplets t;
  const int bulk = m.bulk_root;
  for (int ei = 0; ei < static_cast<int>(m.edges.size()); ++ei) {
    const MeshEdge& e = m.edges[ei];
    if (e.kind == EdgeKind::fracture) continue;
    const int col = Q->dof(bulk, ei);
    t.emplace_back(P->dof(bulk, e.tri_minus), col, e.length / m.tris[e.tri_minus].area);
    if (e.tri_plus >= 0) t.emplace_back(P->dof(bulk, e.tri_plus), col, -e.length / m.tris[e.tri_plus].area);
  }
  for (const auto& [r, fm] : m.fractures) {
    // Skin fluxes leave the bulk cell through its boundary piece.
    for (int side : {1, -1}) {
      const int skin = side > 0 ? fm.skin_plus : fm.skin_minus;
      for (const auto& cell : fm.cells) {
        const int tri = side > 0 ? cell.tri_plus : cell.tri_minus;
        t.emplace_back(P->dof(bulk, tri), Q->dof(skin, cell.index), cell.length / m.tris[tri].area);
      }
    }
    // Tangential fracture flux at interior vertices, oriented along the tangent.
    for (std::size_t v = 1; v + 1 < fm.vertices.size(); ++v) {
      const int col = Q->dof(r, static_cast<int>(v));
      t.emplace_back(P->dof(r, static_cast<int>(v) - 1), col, 1.0 / fm.cells[v - 1].length);
      t.emplace_back(P->dof(r, static_cast<int>(v)), col, -1.0 / fm.cells[v].length);
    }
    // Flux through the two fracture ends into the point nodes.
    t.emplace_back(P->dof(r, 0), Q->dof(fm.start_node, 0), 1.0 / fm.cells.front().length);
    t.emplace_back(P->dof(r, fm.cells.back().index), Q->dof(fm.end_node, 0), 1.0 / fm.cells.back().length);
  }
  return make(Q, P, t, "local divergence");
}

MdOperator assemble_jump_flux(SpacePtr Q, SpacePtr P) {
  require(Q, SpaceKind::Flux, "jump");
  require(P, SpaceKind::Density, "jump");
  const MdMesh& m = *Q->mesh;
  Triplets t;
  // Interface fluxes are oriented into the lower-dimensional cell, so each one enters the
  // jump with (-1)^{n-k} = -1 and unit orientation.
  for (const auto& [r, fm] : m.fractures) {
    for (int skin : {fm.skin_plus, fm.skin_minus}) {
      for (const auto& cell : fm.cells) t.emplace_back(P->dof(r, cell.index), Q->dof(skin, cell.index), -1.0);
    }
    t.emplace_back(P->dof(fm.start_root, 0), Q->dof(fm.start_node, 0), -1.0);
    t.emplace_back(P->dof(fm.end_root, 0), Q->dof(fm.end_node, 0), -1.0);
  }
  return make(Q, P, t, "jump (k=n-1)");
}

MdOperator assemble_divergence(SpacePtr Q, SpacePtr P) {
  MdOperator a = assemble_local_divergence(Q, P);
  MdOperator b = assemble_jump_flux(Q, P);
  a.matrix += b.matrix;
  a.matrix.prune(0.0);
  a.name = "divergence";
  return a;
}

MdOperator assemble_symmetrizer(SpacePtr E, SpacePtr G) {
  require(E, SpaceKind::Tensor, "symmetrizer");
  require(G, SpaceKind::Strain, "symmetrizer");
  const MdMesh& m = *E->mesh;
  const MdGeometry& g = *m.geom;
  const int n = g.ambient_dim;
  Triplets t;
  const Mat& Fb = g.node(m.bulk_root).frame.tangents;
  // Bulk: sym(F̲ᵀ Du) stored as (xx, yy, xy).
  const int comp_of[3][2] = {{0, 0}, {1, 1}, {0, 1}};
  for (int ti = 0; ti < static_cast<int>(m.tris.size()); ++ti) {
    for (int s = 0; s < 3; ++s) {
      const int p = comp_of[s][0], q = comp_of[s][1];
      for (int a = 0; a < n; ++a) {
        t.emplace_back(G->dof(m.bulk_root, ti, s), E->dof(m.bulk_root, ti, a * n + q), 0.5 * Fb(a, p));
        t.emplace_back(G->dof(m.bulk_root, ti, s), E->dof(m.bulk_root, ti, a * n + p), 0.5 * Fb(a, q));
      }
    }
  }
  for (const auto& [r, fm] : m.fractures) {
    const double inv_l = 1.0 / fm.aperture;
    for (const auto& cell : fm.cells) {
      for (int skin : {fm.skin_plus, fm.skin_minus}) {
        for (int a = 0; a < n; ++a) t.emplace_back(G->dof(skin, cell.index), E->dof(skin, cell.index, a), fm.tangent(a));
      }
      for (int a = 0; a < n; ++a) {
        t.emplace_back(G->dof(r, cell.index, 0), E->dof(r, cell.index, a), fm.tangent(a));
        t.emplace_back(G->dof(r, cell.index, 1), E->dof(r, cell.index, a), inv_l * fm.normal(a));
      }
    }
  }
  return make(E, G, t, "symmetrizer");
}

MdOperator assemble_symmetric_gradient(SpacePtr U, SpacePtr E, SpacePtr G) {
  MdOperator d = assemble_gradient(U, E);
  MdOperator s = assemble_symmetrizer(E, G);
  MdOperator out;
  out.domain = U;
  out.codomain = G;
  out.matrix = (s.matrix * d.matrix).pruned(1e-300);
  out.name = "symmetric gradient";
  return out;
}

MdOperator assemble_matrix_trace(SpacePtr G, SpacePtr P) {
  require(G, SpaceKind::Strain, "matrix trace");
  require(P, SpaceKind::Density, "matrix trace");
  const MdMesh& m = *G->mesh;
  const MdGeometry& g = *m.geom;
  Triplets t;
  for (int ti = 0; ti < static_cast<int>(m.tris.size()); ++ti) {
    t.emplace_back(P->dof(m.bulk_root, ti), G->dof(m.bulk_root, ti, 0), 1.0);
    t.emplace_back(P->dof(m.bulk_root, ti), G->dof(m.bulk_root, ti, 1), 1.0);
  }
  for (const auto& [r, fm] : m.fractures) {
    const double w = g.omega(r, r);
    for (const auto& cell : fm.cells) {
      const int row = P->dof(r, cell.index);
      t.emplace_back(row, G->dof(r, cell.index, 1), w);
      t.emplace_back(row, G->dof(fm.skin_plus, cell.index), 0.5);
      t.emplace_back(row, G->dof(fm.skin_minus, cell.index), 0.5);
    }
    t.emplace_back(P->dof(fm.start_root, 0), G->dof(r, fm.cells.front().index, 1), g.omega(fm.start_root, r));
    t.emplace_back(P->dof(fm.end_root, 0), G->dof(r, fm.cells.back().index, 1), g.omega(fm.end_root, r));
  }
  return make(G, P, t, "matrix trace");
}

MdOperator assemble_extension(SpacePtr U, SpacePtr X) {
  require(U, SpaceKind::Vector, "extension");
  require(X, SpaceKind::Extended, "extension");
  const MdMesh& m = *U->mesh;
  const MdGeometry& g = *m.geom;
  const int n = g.ambient_dim;
  Triplets t;
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    const int owner = m.copies[c].owner;
    for (int a = 0; a < n; ++a) t.emplace_back(X->dof(owner, c, a), U->dof(owner, c, a), 1.0);
  }
  auto average_at = [&](int row_node, int entity, int vertex) {
    const auto& cs = m.vertex_copies[vertex];
    for (int c : cs) {
      for (int a = 0; a < n; ++a) {
        t.emplace_back(X->dof(row_node, entity, a), U->dof(m.copies[c].owner, c, a), 1.0 / cs.size());
      }
    }
  };
  for (const auto& [r, fm] : m.fractures) {
    for (std::size_t v = 1; v + 1 < fm.vertices.size(); ++v) average_at(r, static_cast<int>(v), fm.vertices[v]);
    average_at(fm.start_node, 0, fm.vertices.front());
    average_at(fm.end_node, 0, fm.vertices.back());
  }
  for (const auto& [i, pc] : m.points) average_at(i, 0, pc.vertex);
  return make(U, X, t, "extension");
}

MdOperator assemble_restriction(SpacePtr X, SpacePtr U) {
  require(X, SpaceKind::Extended, "restriction");
  require(U, SpaceKind::Vector, "restriction");
  const MdMesh& m = *U->mesh;
  const int n = m.geom->ambient_dim;
  Triplets t;
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    const int owner = m.copies[c].owner;
    for (int a = 0; a < n; ++a) t.emplace_back(U->dof(owner, c, a), X->dof(owner, c, a), 1.0);
  }
  return make(X, U, t, "restriction");
}

MdOperator apply_column_mask(const MdOperator& op, const Vec& mask, const std::string& name) {
  MdOperator out = op;
  out.matrix = diag_scale(Vec::Ones(op.matrix.rows()), op.matrix, mask).pruned(1e-300);
  out.name = name;
  return out;
}

MdOperator weighted_negative_adjoint(const MdOperator& a, const std::string& name) {
  MdOperator out;
  out.domain = a.codomain;
  out.codomain = a.domain;
  const Vec inv = a.domain->weights.cwiseInverse();
  out.matrix = diag_scale(-inv, SpMat(a.matrix.transpose()), a.codomain->weights).pruned(1e-300);
  out.name = name;
  out.adjoint_of = a.name;
  return out;
}

MdOperator weighted_adjoint(const MdOperator& a, const std::string& name) {
  MdOperator out = weighted_negative_adjoint(a, name);
  out.matrix = -out.matrix;
  return out;
}

CoOperators assemble_co_ops(const MdOperator& grad_bc, const MdOperator& div_bc) {
  return {weighted_negative_adjoint(div_bc, "co-divergence"), weighted_negative_adjoint(grad_bc, "co-gradient")};
}

MdOperator assemble_co_symmetric_gradient(const MdOperator& symgrad_bc) {
  return weighted_negative_adjoint(symgrad_bc, "co-symmetric gradient");
}

OperatorSet assemble_operators(std::shared_ptr<const MdMesh> mesh, const BoundaryConditions& bc) {
  OperatorSet o;
  o.mesh = mesh;
  o.bc = bc;
  o.P = build_space(mesh, SpaceKind::Density);
  o.Q = build_space(mesh, SpaceKind::Flux);
  o.U = build_space(mesh, SpaceKind::Vector);
  o.G = build_space(mesh, SpaceKind::Strain);
  o.E = build_space(mesh, SpaceKind::Tensor);
  o.X = build_space(mesh, SpaceKind::Extended);
  o.mask_u = displacement_mask(*o.U, bc);
  o.mask_q = flux_mask(*o.Q, bc);
  o.grad = assemble_gradient(o.U, o.E);
  o.grad_bc = apply_column_mask(o.grad, o.mask_u, "gradient (bc)");
  o.div = assemble_divergence(o.Q, o.P);
  o.div_bc = apply_column_mask(o.div, o.mask_q, "divergence (bc)");
  CoOperators co = assemble_co_ops(o.grad_bc, o.div_bc);
  o.co_div = co.co_divergence;
  o.co_grad = co.co_gradient;
  o.sym = assemble_symmetrizer(o.E, o.G);
  o.symgrad = assemble_symmetric_gradient(o.U, o.E, o.G);
  o.symgrad_bc = apply_column_mask(o.symgrad, o.mask_u, "symmetric gradient (bc)");
  o.co_symgrad = assemble_co_symmetric_gradient(o.symgrad_bc);
  o.trace_t = assemble_matrix_trace(o.G, o.P);
  o.trace = weighted_adjoint(o.trace_t, "matrix trace adjoint");
  o.extension = assemble_extension(o.U, o.X);
  o.restriction = assemble_restriction(o.X, o.U);
  return o;
}

double adjoint_residual(const MdOperator& a, const MdOperator& b) {
  SpMat r = diag_scale(a.codomain->weights, a.matrix, Vec::Ones(a.matrix.cols())) +
            diag_scale(Vec::Ones(a.matrix.rows()), SpMat(b.matrix.transpose()), a.domain->weights);
  double mx = 0.0;
  for (int k = 0; k < r.outerSize(); ++k) {
    for (SpMat::InnerIterator it(r, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
  }
  return mx;
}

void save_matrix_market(const MdOperator& op, const std::string& path) {
  if (!Eigen::saveMarket(op.matrix, path)) throw Error("cannot write " + path);
}

}  // namespace mdpm
