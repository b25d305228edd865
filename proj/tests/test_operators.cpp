#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace mdpm;
using namespace mdpm::testing;

namespace {

// Fracture cells whose two ends are both interior fracture vertices.
std::vector<FractureCell> interior_cells(const FractureMesh& fm) {
  std::vector<FractureCell> out;
  for (const auto& c : fm.cells) {
    if (c.index > 0 && c.index + 1 < static_cast<int>(fm.cells.size())) out.push_back(c);
  }
  return out;
}

double pairing(const MdOperator& a, const MdOperator& b, double sign, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec x = random_vec(a.domain->size(), rng), y = random_vec(a.codomain->size(), rng);
    const double lhs = weighted_dot(*a.domain, b.apply(y), x);
    const double rhs = weighted_dot(*a.codomain, y, a.apply(x));
    const double scale = std::sqrt(weighted_dot(*a.domain, x, x) * weighted_dot(*a.codomain, y, y));
    worst = std::max(worst, std::abs(lhs - sign * rhs) / scale);
  }
  return worst;
}

}  // namespace

TEST(Operators, DimensionsMatchLayouts) {
  const auto ops = ops_of("slit.json", 0.125);
  for (const MdOperator* op : {&ops->grad, &ops->div, &ops->symgrad, &ops->co_symgrad, &ops->co_div, &ops->trace_t,
                               &ops->trace, &ops->extension, &ops->restriction, &ops->sym}) {
    EXPECT_EQ(op->matrix.rows(), op->codomain->size()) << op->name;
    EXPECT_EQ(op->matrix.cols(), op->domain->size()) << op->name;
  }
}

TEST(Operators, OpeningJumpAcrossTheSlit) {
  const auto ops = ops_of("slit.json", 0.125);
  const FractureMesh& fm = ops->mesh->fracture(3);
  const MdFunction u = vector_field(*ops, [](const Vec2&, int side) { return side > 0 ? Vec2(0, 1) : Vec2(0, 0); });
  const MdOperator jump = assemble_jump_vector(ops->U, ops->E);
  const Vec ju = jump.apply(u.coeffs);
  const Vec e = ops->symgrad.apply(u.coeffs);
  ASSERT_FALSE(interior_cells(fm).empty());
  for (const auto& c : interior_cells(fm)) {
    EXPECT_DOUBLE_EQ(ju(ops->E->dof(3, c.index, 0)), 0.0);
    EXPECT_DOUBLE_EQ(ju(ops->E->dof(3, c.index, 1)), 1.0);
    EXPECT_DOUBLE_EQ(e(ops->G->dof(3, c.index, 0)), 0.0);
    EXPECT_NEAR(e(ops->G->dof(3, c.index, 1)), 1.0 / fm.aperture, 1e-12);  // perpendicular rows carry 1/aperture
  }
}

TEST(Operators, EqualTracesHaveNoJump) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdFunction u = vector_field(*ops, [](const Vec2& x, int) { return Vec2(x(1), 0.3); });
  const Vec ju = assemble_jump_vector(ops->U, ops->E).apply(u.coeffs);
  for (const auto& c : ops->mesh->fracture(3).cells) {
    EXPECT_EQ(ju(ops->E->dof(3, c.index, 0)), 0.0);
    EXPECT_EQ(ju(ops->E->dof(3, c.index, 1)), 0.0);
  }
}

TEST(Operators, IntersectionCollectsFourArmFluxes) {
  const auto ops = ops_of("crossing.json", 0.125);
  const MdGeometry& g = *ops->mesh->geom;
  MdFunction q(ops->Q);
  int arms = 0;
  for (const auto& [r, fm] : ops->mesh->fractures) {
    for (int end : {fm.start_node, fm.end_node}) {
      if (g.node(end).root_id == 1) {
        q.coeffs(ops->Q->dof(end, 0)) = 1.0;
        ++arms;
      }
    }
  }
  ASSERT_EQ(arms, 4);
  const Vec jq = assemble_jump_flux(ops->Q, ops->P).apply(q.coeffs);
  EXPECT_DOUBLE_EQ(jq(ops->P->dof(1, 0)), -4.0);
}

TEST(Operators, UniformFluxIsDivergenceFree) {
  const auto ops = ops_of("box.json", 0.125);
  const MdMesh& m = *ops->mesh;
  MdFunction q(ops->Q);
  for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) q.coeffs(ops->Q->dof(m.bulk_root, e)) = m.edges[e].normal.dot(Vec2(1, 0));
  const Vec d = ops->div.apply(q.coeffs);
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    bool touches_boundary = false;
    for (int e : m.tris[t].edge) touches_boundary = touches_boundary || m.edges[e].kind == EdgeKind::boundary;
    if (!touches_boundary) EXPECT_NEAR(d(ops->P->dof(m.bulk_root, t)), 0.0, 1e-12);
  }
}

TEST(Operators, InterfaceFluxesFeedTheFracture) {
  const auto ops = ops_of("slit.json", 0.125);
  const FractureMesh& fm = ops->mesh->fracture(3);
  MdFunction q(ops->Q);
  for (const auto& c : fm.cells) {
    q.coeffs(ops->Q->dof(fm.skin_plus, c.index)) = 1.0;
    q.coeffs(ops->Q->dof(fm.skin_minus, c.index)) = 1.0;
  }
  const Vec d = ops->div.apply(q.coeffs);
  // Fluxes are densities per unit length, so an inflow of 1 from each side is a source of 2.
  for (const auto& c : fm.cells) EXPECT_DOUBLE_EQ(-d(ops->P->dof(3, c.index)), 2.0);
}

TEST(Operators, ClosedSystemTelescopes) {
  for (const char* f : {"slit.json", "crossing.json"}) {
    const auto ops = ops_of(f, 0.125);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
      const Vec q = random_vec(ops->Q->size(), rng);
      EXPECT_LE(std::abs(ops->P->weights.dot(ops->div_bc.apply(q))), 1e-12 * (1.0 + max_abs(q))) << f;
    }
  }
}

TEST(Operators, CoDivergenceIsATwoPointDifference) {
  const auto ops = ops_of("box.json", 0.25);
  const MdMesh& m = *ops->mesh;
  std::mt19937_64 rng(6);
  const Vec p = random_vec(ops->P->size(), rng);
  const Vec g = ops->co_div.apply(p);
  for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
    const MeshEdge& ed = m.edges[e];
    if (ed.kind != EdgeKind::interior) continue;
    const int dof = ops->Q->dof(m.bulk_root, e);
    const double dist = ops->Q->weights(dof) / ed.length;
    const double expected = (p(ops->P->dof(m.bulk_root, ed.tri_plus)) - p(ops->P->dof(m.bulk_root, ed.tri_minus))) / dist;
    EXPECT_NEAR(g(dof), expected, 1e-12 * (1.0 + std::abs(expected)));
  }
  EXPECT_LE(max_abs(ops->co_div.apply(Vec::Ones(ops->P->size()))), 1e-12);
  EXPECT_LE(adjoint_residual(ops->div_bc, ops->co_div), 1e-14);
}

TEST(Operators, AffineStrain) {
  const auto ops = ops_of("box.json", 0.25);
  const Vec e = ops->symgrad.apply(vector_field(*ops, [](const Vec2& x, int) { return Vec2(x(0), 0); }).coeffs);
  for (int t = 0; t < static_cast<int>(ops->mesh->tris.size()); ++t) {
    EXPECT_NEAR(e(ops->G->dof(1, t, 0)), 1.0, 1e-12);
    EXPECT_NEAR(e(ops->G->dof(1, t, 1)), 0.0, 1e-12);
    EXPECT_NEAR(e(ops->G->dof(1, t, 2)), 0.0, 1e-12);
  }
}

TEST(Operators, SingleFractureLinearizedStrain) {
  const auto ops = ops_of("slit.json", 0.125);
  const FractureMesh& fm = ops->mesh->fracture(3);
  const Vec2 u2(0.3, -0.2), u3(-0.1, 0.4);
  const Vec e =
      ops->symgrad.apply(vector_field(*ops, [&](const Vec2&, int side) { return side > 0 ? u2 : (side < 0 ? u3 : Vec2(0, 0)); }).coeffs);
  for (const auto& c : interior_cells(fm)) {
    EXPECT_NEAR(e(ops->G->dof(3, c.index, 0)), fm.tangent.dot(u2 - u3), 1e-12);
    EXPECT_NEAR(e(ops->G->dof(3, c.index, 1)), fm.normal.dot(u2 - u3) / fm.aperture, 1e-10);
  }
}

TEST(Operators, TranslationsAndRotationsInTheKernel) {
  for (const char* f : {"slit.json", "crossing.json", "box.json"}) {
    const auto ops = ops_of(f, 0.125);
    EXPECT_LE(max_abs(ops->symgrad.apply(vector_field(*ops, [](const Vec2&, int) { return Vec2(0.7, -1.3); }).coeffs)), 1e-12) << f;
  }
  const auto box = ops_of("box.json", 0.125);
  EXPECT_LE(max_abs(box->symgrad.apply(vector_field(*box, [](const Vec2& x, int) { return Vec2(-x(1), x(0)); }).coeffs)), 1e-12);
}

TEST(Operators, CoSymmetricGradientPairing) {
  for (const char* f : {"slit.json", "crossing.json"}) {
    const auto ops = ops_of(f, 0.125);
    std::mt19937_64 rng(7);
    EXPECT_LE(pairing(ops->symgrad_bc, ops->co_symgrad, -1.0, rng), 1e-12) << f;
    EXPECT_LE(pairing(ops->div_bc, ops->co_div, -1.0, rng), 1e-12) << f;
    EXPECT_LE(adjoint_residual(ops->symgrad_bc, ops->co_symgrad), 1e-14) << f;
    EXPECT_LE(adjoint_residual(ops->div_bc, ops->co_div), 1e-14) << f;
  }
}

TEST(Operators, UniformStressIsInEquilibrium) {
  const auto ops = ops_of("box.json", 0.5);
  const MdMesh& m = *ops->mesh;
  MdFunction s(ops->G);
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    s.coeffs(ops->G->dof(1, t, 0)) = 1.0;
    s.coeffs(ops->G->dof(1, t, 1)) = 1.0;
  }
  const Vec f = ops->co_symgrad.apply(s.coeffs);
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    const Vec2 x = m.vertices[m.copies[c].vertex];
    const bool interior = x(0) > 0 && x(0) < 1 && x(1) > 0 && x(1) < 1;
    if (!interior) continue;
    EXPECT_NEAR(f(ops->U->dof(1, c, 0)), 0.0, 1e-12);
    EXPECT_NEAR(f(ops->U->dof(1, c, 1)), 0.0, 1e-12);
  }
}

TEST(Operators, FractureTractionPushesTheSidesApart) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdMesh& m = *ops->mesh;
  const FractureMesh& fm = m.fracture(3);
  const FractureCell c = interior_cells(fm).front();
  MdFunction s(ops->G);
  s.coeffs(ops->G->dof(3, c.index, 1)) = 1.0;
  const Vec force = ops->U->weights.cwiseProduct(ops->co_symgrad.apply(s.coeffs));
  for (int k = 0; k < 2; ++k) {
    const int dp = ops->U->dof(m.copies[c.copy_plus[k]].owner, c.copy_plus[k], 0);
    const int dm = ops->U->dof(m.copies[c.copy_minus[k]].owner, c.copy_minus[k], 0);
    EXPECT_NEAR(force(dp + 1), -force(dm + 1), 1e-14);
    EXPECT_NE(force(dp + 1), 0.0);
    EXPECT_NEAR(force(dp), 0.0, 1e-14);
  }
}

TEST(Operators, MatrixTraceExamples) {
  const auto ops = ops_of("slit.json", 0.125);
  const FractureMesh& fm = ops->mesh->fracture(3);
  MdFunction e(ops->G);
  e.coeffs(ops->G->dof(4, 0, 0)) = 1.0;
  e.coeffs(ops->G->dof(4, 0, 1)) = 1.0;
  const FractureCell c = fm.cells[1];
  e.coeffs(ops->G->dof(3, c.index, 1)) = 0.5;
  e.coeffs(ops->G->dof(fm.skin_plus, c.index)) = 0.2;
  e.coeffs(ops->G->dof(fm.skin_minus, c.index)) = 0.2;
  const Vec tr = ops->trace_t.apply(e.coeffs);
  EXPECT_DOUBLE_EQ(tr(ops->P->dof(4, 0)), 2.0);
  EXPECT_DOUBLE_EQ(tr(ops->P->dof(3, c.index)), 0.7);
  std::mt19937_64 rng(8);
  EXPECT_LE(pairing(ops->trace_t, ops->trace, 1.0, rng), 1e-12);
}

TEST(Operators, ExtensionAveragesTheTraces) {
  const auto ops = ops_of("slit.json", 0.125);
  const FractureMesh& fm = ops->mesh->fracture(3);
  const Vec x = ops->extension.apply(
      vector_field(*ops, [](const Vec2&, int side) { return side > 0 ? Vec2(0, 1) : Vec2(0, 0); }).coeffs);
  for (std::size_t v = 1; v + 1 < fm.vertices.size(); ++v) {
    const int d = ops->X->dof(3, static_cast<int>(v), 0);
    EXPECT_DOUBLE_EQ(x(d), 0.0);
    EXPECT_DOUBLE_EQ(x(d + 1), 0.5);
  }
  const Vec xc = ops->extension.apply(vector_field(*ops, [](const Vec2&, int) { return Vec2(2.0, -1.0); }).coeffs);
  for (int i = 0; i < xc.size(); i += 2) {
    EXPECT_NEAR(xc(i), 2.0, 1e-14);
    EXPECT_NEAR(xc(i + 1), -1.0, 1e-14);
  }
}

TEST(Operators, RestrictionInvertsExtension) {
  const auto ops = ops_of("crossing.json", 0.125);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const Vec u = random_vec(ops->U->size(), rng);
    EXPECT_EQ(ops->restriction.apply(ops->extension.apply(u)), u);
  }
}

TEST(Operators, RowsStayLocal) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdMesh& m = *ops->mesh;
  // A bulk strain row only sees the copies at the corners of its triangle.
  for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
    std::set<int> allowed;
    for (int c : m.tris[t].copy) allowed.insert(c);
    for (int comp = 0; comp < 3; ++comp) {
      const int row = ops->G->dof(4, t, comp);
      for (int col = 0; col < ops->symgrad.matrix.cols(); ++col) {
        if (ops->symgrad.matrix.coeff(row, col) != 0.0) EXPECT_TRUE(allowed.count(ops->U->dofs[col].entity)) << t;
      }
    }
  }
}

TEST(Operators, BoundaryConditionNames) {
  EXPECT_EQ(parse_mech_bc("roller"), MechBC::roller);
  EXPECT_EQ(parse_flow_bc("drained"), FlowBC::drained);
  EXPECT_THROW(parse_mech_bc("glued"), ConfigError);
  EXPECT_THROW(parse_flow_bc("leaky"), ConfigError);
}

TEST(Operators, ClampedMaskRemovesBoundaryDofs) {
  BoundaryConditions bc;
  bc.mech[0] = MechBC::roller;
  bc.mech[2] = MechBC::free;
  const auto ops = ops_of("box.json", 0.25, bc);
  const MdMesh& m = *ops->mesh;
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    const Vec2 x = m.vertices[m.copies[c].vertex];
    const int d = ops->U->dof(1, c, 0);
    if (x(0) == 0.0 || x(0) == 1.0) {
      EXPECT_EQ(ops->mask_u(d), 0.0);
      EXPECT_EQ(ops->mask_u(d + 1), 0.0);
    } else if (x(1) == 0.0) {
      EXPECT_EQ(ops->mask_u(d), 1.0);  // the roller slides along the bottom
      EXPECT_EQ(ops->mask_u(d + 1), 0.0);
    } else {
      EXPECT_EQ(ops->mask_u(d), 1.0);
      EXPECT_EQ(ops->mask_u(d + 1), 1.0);
    }
  }
}
