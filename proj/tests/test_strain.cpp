#include <gtest/gtest.h>

#include "mdpm/strain.hpp"
#include "mdpm/verification.hpp"
#include "test_support.hpp"

using namespace mdpm;
using namespace mdpm::testing;

namespace {

// The half y > y0 moves by +shift and the other half by -shift.  Copies are assigned to a half
// through their triangles, so the intersection copies of a crossing split cleanly.
Configuration split_configuration(const OperatorSet& ops, double y0, const Vec2& shift) {
  const MdMesh& m = *ops.mesh;
  Vec u(ops.U->size());
  for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
    double above = 0.0;
    for (int t : m.copies[c].tris) above += m.tris[t].centroid(1) > y0 ? 1.0 : -1.0;
    const double s = above > 0 ? 1.0 : (above < 0 ? -1.0 : 0.0);
    const int d = ops.U->dof(m.copies[c].owner, c, 0);
    u.segment<2>(d) = m.vertices[m.copies[c].vertex] + s * shift;
  }
  Configuration conf;
  conf.X = ops.X;
  conf.x = ops.extension.apply(u);
  return conf;
}

bool touches_tip(const FractureCell& c) { return c.copy_plus[0] == c.copy_minus[0] || c.copy_plus[1] == c.copy_minus[1]; }

}  // namespace

TEST(Strain, UnstrainedBaseline) {
  const auto ops = ops_of("slit.json", 0.125);
  const Configuration base = reference_configuration(*ops);
  EXPECT_EQ(max_abs(finite_strain(base, base, *ops).coeffs), 0.0);
}

TEST(Strain, RigidMotionsAreStrainFree) {
  const auto ops = ops_of("crossing.json", 0.125);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI), shift(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    EXPECT_LE(finite_strain_max(rigid_configuration(*ops, angle(rng), Vec2(shift(rng), shift(rng))), *ops), 1e-12);
  }
}

TEST(Strain, UniaxialStretch) {
  const auto ops = ops_of("box.json", 0.25);
  const double g = 1.1;
  const Configuration phi = configuration_from_map(
      *ops, [g](const Vec2& x, int) { return Vec2(g * x(0), x(1)); },
      [g](const Vec2&) { return Mat2{{g, 0.0}, {0.0, 1.0}}; });
  const MdFunction e = finite_strain(phi, reference_configuration(*ops), *ops);
  for (int t = 0; t < static_cast<int>(ops->mesh->tris.size()); ++t) {
    EXPECT_NEAR(e.coeffs(ops->G->dof(1, t, 0)), 0.105, 1e-14);
    EXPECT_NEAR(e.coeffs(ops->G->dof(1, t, 1)), 0.0, 1e-14);
    EXPECT_NEAR(e.coeffs(ops->G->dof(1, t, 2)), 0.0, 1e-14);
  }
}

TEST(Strain, SlidingHasNoNormalStrain) {
  // Paired points are closest points, so the deformed jump has no parallel part and the
  // tangential row reads the slip off the reference positions.
  const auto ops = ops_of("slit.json", 0.125);
  const MdMesh& m = *ops->mesh;
  const FractureMesh& fm = m.fracture(3);
  const MdFunction e = finite_strain(split_configuration(*ops, 0.5, Vec2(0.01, 0.0)), reference_configuration(*ops), *ops);
  for (const auto& c : fm.cells) {
    EXPECT_LE(std::abs(e.coeffs(ops->G->dof(3, c.index, 1))), 1e-12);
    if (!touches_tip(c)) EXPECT_NEAR(e.coeffs(ops->G->dof(3, c.index, 0)), 0.02, 1e-12);
  }
}

TEST(Strain, IdentityVolumeIsOne) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdFunction vol = volume_density(reference_configuration(*ops), *ops);
  for (double v : vol.restrict(4)) EXPECT_NEAR(v, 1.0, 1e-14);
  for (double v : vol.restrict(3)) EXPECT_NEAR(v, 0.01, 1e-16);
  for (double v : vol.restrict(1)) EXPECT_NEAR(v, 1e-4, 1e-18);
}

TEST(Strain, OpeningFractureVolume) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdMesh& m = *ops->mesh;
  const FractureMesh& fm = m.fracture(3);
  const MdFunction vol = volume_density(split_configuration(*ops, 0.5, Vec2(0.0, 0.0025)), *ops);
  int checked = 0;
  for (const auto& c : fm.cells) {
    if (touches_tip(c)) continue;
    EXPECT_NEAR(vol.coeffs(ops->P->dof(3, c.index)), 0.015, 1e-14);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Strain, IntersectionVolumeSumsArmOpenings) {
  const auto ops = ops_of("crossing.json", 0.125);
  const MdFunction vol = volume_density(split_configuration(*ops, 0.5, Vec2(0.0, 0.0025)), *ops);
  EXPECT_NEAR(vol.coeffs(ops->P->dof(1, 0)), 2e-4, 1e-16);
}

TEST(Strain, InvertedCellIsAFault) {
  const auto ops = ops_of("box.json", 0.25);
  const Configuration flip = configuration_from_map(*ops, [](const Vec2& x, int) { return Vec2(-x(0), x(1)); });
  EXPECT_THROW(volume_density(flip, *ops), StrainError);
}

TEST(Strain, LinearizedVolumeExamples) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdMesh& m = *ops->mesh;
  EXPECT_EQ(max_abs(linearized_volume(MdFunction(ops->U), *ops).coeffs), 0.0);

  const double delta = 0.003;
  const MdFunction open = vector_field(*ops, [delta](const Vec2&, int side) { return Vec2(0.0, 0.5 * side * delta); });
  const MdFunction j = linearized_volume(open, *ops);
  const FractureMesh& fm = m.fracture(3);
  for (const auto& c : fm.cells) {
    if (!touches_tip(c)) EXPECT_NEAR(j.coeffs(ops->P->dof(3, c.index)), delta, 1e-15);
  }

  const auto box = ops_of("box.json", 0.25);
  const MdFunction jb = linearized_volume(vector_field(*box, [](const Vec2& x, int) { return x; }), *box);
  for (double v : jb.coeffs) EXPECT_NEAR(v, 2.0, 1e-13);
}

TEST(Strain, LinearizedVolumeMatchesDirectEvaluation) {
  for (const char* f : {"slit.json", "crossing.json"}) {
    const auto ops = ops_of(f, 0.125);
    std::mt19937_64 rng(22);
    for (int k = 0; k < 20; ++k) {
      const MdFunction u(ops->U, random_vec(ops->U->size(), rng));
      const Vec a = linearized_volume(u, *ops).coeffs, b = linearized_volume_direct(u, *ops).coeffs;
      EXPECT_LE(max_abs(a - b), 1e-14 * (1.0 + max_abs(u.coeffs) * 16)) << f;
    }
  }
}

TEST(Strain, LinearizationSlopes) {
  const std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4};
  const auto box = ops_of("box.json", 0.25);
  const MdFunction affine = vector_field(*box, [](const Vec2& x, int) { return Vec2(0.3 * x(0) + 0.1 * x(1), -0.2 * x(1)); });
  EXPECT_GE(linearization_consistency(*box, affine, eps).slope_r, 1.9);

  const auto slit = ops_of("slit.json", 0.125);
  for (const auto& [name, u] : deformation_modes(*slit, 3)) {
    const ConsistencyReport c = linearization_consistency(*slit, u, eps);
    EXPECT_GE(c.slope_r, 1.9) << name;
    EXPECT_GE(c.slope_s, 1.9) << name;
  }
}

TEST(Strain, TranslationsHaveNoRemainder) {
  const auto ops = ops_of("slit.json", 0.125);
  const MdFunction u = vector_field(*ops, [](const Vec2&, int) { return Vec2(0.4, -0.9); });
  const ConsistencyReport c = linearization_consistency(*ops, u, {1e-1, 1e-2, 1e-3, 1e-4});
  for (std::size_t k = 0; k < c.eps.size(); ++k) EXPECT_LE(c.r[k], 1e-12 * (1.0 + c.eps[k]));
}

TEST(Strain, RotationRemainderIsQuadratic) {
  // The linearized strain of the rotation generator vanishes while the finite strain keeps a
  // term of order ε², so the remainder decays with slope 2.
  const auto ops = ops_of("box.json", 0.25);
  const MdFunction u = vector_field(*ops, [](const Vec2& x, int) { return Vec2(-x(1), x(0)); });
  const ConsistencyReport c = linearization_consistency(*ops, u, {1e-1, 1e-2, 1e-3});
  EXPECT_NEAR(c.slope_r, 2.0, 1e-3);
  EXPECT_LE(max_abs(linearized_strain(u, *ops).coeffs), 1e-12);
}

TEST(Strain, ConsistencyCsv) {
  ConsistencyReport r;
  r.eps = {0.1, 0.01};
  r.r = {1e-2, 1e-4};
  r.s = {1e-3, 1e-5};
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.rfind("eps,r,s", 0), 0u);
  EXPECT_NEAR(loglog_slope(r.eps, r.r), 2.0, 1e-12);
}
