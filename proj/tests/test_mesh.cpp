#include <gtest/gtest.h>

#include <set>

#include "mdpm/config.hpp"
#include "mdpm/mesh.hpp"

using namespace mdpm;

namespace {

MdMesh mesh_of(const std::string& name, double h) {
  return build_mesh(load_geometry(resolve_data_path("geometries/" + name)), h);
}

void expect_paired(const MdMesh& m) {
  for (const auto& [r, fm] : m.fractures) {
    std::set<int> plus, minus;
    for (const auto& c : fm.cells) {
      EXPECT_GT(c.length, 0.0);
      EXPECT_NE(c.tri_plus, c.tri_minus);
      plus.insert(c.tri_plus);
      minus.insert(c.tri_minus);
      const MeshEdge& e = m.edges[c.edge];
      EXPECT_EQ(e.kind, EdgeKind::fracture);
      EXPECT_EQ(e.fracture_root, r);
      for (int k = 0; k < 2; ++k) {
        // Away from the fracture ends the two sides carry separate copies.
        const int v = m.copies[c.copy_plus[k]].vertex;
        if (v != fm.vertices.front() && v != fm.vertices.back()) EXPECT_NE(c.copy_plus[k], c.copy_minus[k]);
        EXPECT_EQ(m.copies[c.copy_plus[k]].vertex, m.copies[c.copy_minus[k]].vertex);
      }
    }
    EXPECT_EQ(plus.size(), fm.cells.size());
    EXPECT_EQ(minus.size(), fm.cells.size());
    EXPECT_EQ(fm.vertices.size(), fm.cells.size() + 1);
  }
}

}  // namespace

TEST(Mesh, UnitSquareHalfSpacing) {
  const MdMesh m = mesh_of("box.json", 0.5);
  EXPECT_GE(m.tris.size(), 8u);
  double area = 0.0;
  for (const auto& t : m.tris) {
    EXPECT_GT(t.area, 0.0);
    area += t.area;
  }
  EXPECT_NEAR(area, 1.0, 1e-14);
  for (const auto& e : m.edges) EXPECT_NE(e.kind, EdgeKind::fracture);
  EXPECT_EQ(m.num_boundary_edges(), 8);
}

TEST(Mesh, SlitCellsPairWithBothSkins) {
  const MdMesh m = mesh_of("slit.json", 0.25);
  ASSERT_EQ(m.fractures.size(), 1u);
  const FractureMesh& fm = m.fracture(3);
  EXPECT_EQ(fm.cells.size(), 2u);
  EXPECT_EQ(fm.skin_plus, 7);
  EXPECT_EQ(fm.skin_minus, 8);
  EXPECT_EQ(m.skin_side.at(7), std::make_pair(3, 1));
  EXPECT_EQ(m.skin_side.at(8), std::make_pair(3, -1));
  expect_paired(m);
}

TEST(Mesh, RefinementDoublesFractureCells) {
  for (const char* f : {"slit.json", "crossing.json"}) {
    std::size_t prev = 0;
    for (double h : {0.25, 0.125, 0.0625}) {
      const MdMesh m = mesh_of(f, h);
      expect_paired(m);
      std::size_t cells = 0;
      for (const auto& [r, fm] : m.fractures) cells += fm.cells.size();
      if (prev > 0) {
        EXPECT_LE(cells, 2 * prev + m.fractures.size()) << f;
        EXPECT_GE(cells + m.fractures.size(), 2 * prev) << f;
      }
      prev = cells;
    }
  }
}

TEST(Mesh, FractureSidesTouchOppositeTriangles) {
  const MdMesh m = mesh_of("slit.json", 0.125);
  const FractureMesh& fm = m.fracture(3);
  for (const auto& c : fm.cells) {
    EXPECT_GT((m.tris[c.tri_plus].centroid - c.midpoint).dot(fm.normal), 0.0);
    EXPECT_LT((m.tris[c.tri_minus].centroid - c.midpoint).dot(fm.normal), 0.0);
  }
}

TEST(Mesh, InvalidSpacingIsRejected) {
  const MdGeometry g = load_geometry(resolve_data_path("geometries/slit.json"));
  EXPECT_THROW(build_mesh(g, 0.0), MeshError);
  EXPECT_THROW(build_mesh(g, -0.1), MeshError);
}
