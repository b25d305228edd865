#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mdpm/config.hpp"
#include "mdpm/geometry.hpp"

using namespace mdpm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json slit_json() { return nlohmann::json::parse(slurp(resolve_data_path("geometries/slit.json"))); }

MdGeometry geometry(const std::string& name) { return load_geometry(resolve_data_path("geometries/" + name)); }

int count_kind(const std::vector<Violation>& vs, const std::string& kind) {
  int c = 0;
  for (const auto& v : vs) c += v.kind == kind;
  return c;
}

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST(Geometry, SlitForestStructure) {
  const MdGeometry g = geometry("slit.json");
  EXPECT_EQ(g.roots, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(g.node(4).dim, 2);
  EXPECT_EQ(g.node(3).dim, 1);
  for (int j : {5, 6, 7, 8}) EXPECT_FALSE(g.node(j).is_root());
  // The bulk faces the fracture through two skins.
  EXPECT_EQ(g.descendants_with_root(4, 3).size(), 2u);
  EXPECT_EQ(g.node(7).orientation_to_parent.at(4), 1);
  EXPECT_EQ(g.node(8).orientation_to_parent.at(4), -1);
  EXPECT_EQ(g.dag_root(9), 4);
  EXPECT_EQ(g.dag_root(5), 3);
}

TEST(Geometry, BoxHasNoInterfaces) {
  const MdGeometry g = geometry("box.json");
  ASSERT_EQ(g.roots.size(), 1u);
  EXPECT_EQ(g.node(g.roots[0]).dim, 2);
  for (const auto& [i, js] : g.interface_sets) EXPECT_TRUE(js.empty()) << "J_" << i;
}

TEST(Geometry, CrossingIntersectionHasFourArms) {
  const MdGeometry g = geometry("crossing.json");
  int zero_dim_with_four = 0;
  for (int r : g.roots) {
    if (g.node(r).dim != 0) continue;
    if (g.adjacent_fractures(r).size() == 4) ++zero_dim_with_four;
  }
  EXPECT_EQ(zero_dim_with_four, 1);
  EXPECT_EQ(g.adjacent_fractures(1).size(), 4u);
}

TEST(Geometry, ShippedFilesValidate) {
  for (const char* f : {"slit.json", "box.json", "crossing.json", "column.json"}) {
    EXPECT_TRUE(validate(read_geometry_file(resolve_data_path(std::string("geometries/") + f))).empty()) << f;
  }
}

TEST(Geometry, DoubleClaimedSideIsACoveringViolation) {
  auto doc = slit_json();
  nlohmann::json extra = {{"id", 11}, {"root", 3}, {"dim", 1}, {"aperture", 0.01},
                          {"parents", {{{"id", 4}, {"sign", 1}}}}};
  for (const auto& n : doc["nodes"]) {
    if (n["id"] == 7) extra["frame"] = n["frame"];
  }
  doc["nodes"].push_back(extra);
  const auto vs = validate(parse_geometry(doc.dump()));
  EXPECT_GE(count_kind(vs, "covering"), 1);
  bool side_claim = false;
  for (const auto& v : vs) side_claim = side_claim || v.message.find("claimed by 2 skins") != std::string::npos;
  EXPECT_TRUE(side_claim);
}

TEST(Geometry, DifferentFrameIsAConformityViolation) {
  auto doc = slit_json();
  for (auto& n : doc["nodes"]) {
    if (n["id"] == 7) n["frame"]["origin"] = {0.3, 0.5};
  }
  const auto vs = validate(parse_geometry(doc.dump()));
  EXPECT_EQ(count_kind(vs, "conformity"), 1);
}

TEST(Geometry, DanglingParentIsRejected) {
  auto doc = slit_json();
  for (auto& n : doc["nodes"]) {
    if (n["id"] == 7) n["parents"][0]["id"] = 42;
  }
  EXPECT_THROW(parse_geometry(doc.dump()), GeometryError);
}

TEST(Geometry, DimensionGapIsAViolation) {
  auto doc = slit_json();
  for (auto& n : doc["nodes"]) {
    if (n["id"] == 5) n["parents"][0]["id"] = 4;  // a point directly below the bulk
  }
  EXPECT_GE(count_kind(validate(parse_geometry(doc.dump())), "dimension"), 1);
}

TEST(Geometry, MalformedJsonIsAParseError) {
  EXPECT_THROW(parse_geometry("{\"ambient_dim\": 2, \"nodes\": ["), ParseError);
  EXPECT_THROW(parse_geometry(R"({"ambient_dim": 2, "nodes": [], "bogus": 1})"), ParseError);
}

TEST(Geometry, ProjectionExamples) {
  const std::vector<Vec> seg = {v2(0, 0), v2(1, 0)};
  EXPECT_TRUE(project_onto_polyline(v2(0.3, 0.1), seg).point.isApprox(v2(0.3, 0.0)));
  EXPECT_TRUE(project_onto_polyline(v2(1.4, 0.1), seg).point.isApprox(v2(1.0, 0.0)));
  const Projection on = project_onto_polyline(v2(0.7, 0.0), seg);
  EXPECT_EQ(on.point, v2(0.7, 0.0));
  EXPECT_NEAR(on.theta, 0.7, 1e-15);
}

TEST(Geometry, ProjectionOntoFractureNode) {
  const MdGeometry g = geometry("slit.json");
  EXPECT_TRUE(closest_point_projection(v2(0.3, 0.6), 3, g).isApprox(v2(0.3, 0.5)));
  EXPECT_TRUE(closest_point_projection(v2(0.9, 0.4), 3, g).isApprox(v2(0.75, 0.5)));
}

TEST(Geometry, AmbiguousProjectionThrows) {
  // A point on the axis of a symmetric fold is equally close to both arms.
  const std::vector<Vec> fold = {v2(-1, 1), v2(0, 0), v2(1, 1)};
  EXPECT_THROW(project_onto_polyline(v2(0.0, 1.0), fold), ProjectionAmbiguous);
}

TEST(GeometryProperty, ProjectionIsIdempotent) {
  const std::vector<Vec> line = {v2(0, 0), v2(0.5, 0.2), v2(1, 0)};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int k = 0; k < 1000; ++k) {
    const Vec x = v2(u(rng), u(rng));
    Vec once;
    try {
      once = project_onto_polyline(x, line).point;
    } catch (const ProjectionAmbiguous&) {
      continue;
    }
    EXPECT_LE((project_onto_polyline(once, line).point - once).norm(), 1e-15);
  }
}

TEST(GeometryProperty, ProjectionIsNonexpansiveNearAFracture) {
  const std::vector<Vec> seg = {v2(0.25, 0.5), v2(0.75, 0.5)};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ux(0.15, 0.85), uy(0.4, 0.6);
  for (int k = 0; k < 1000; ++k) {
    const Vec a = v2(ux(rng), uy(rng)), b = v2(ux(rng), uy(rng));
    const Vec pa = project_onto_polyline(a, seg).point, pb = project_onto_polyline(b, seg).point;
    EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-12);
  }
}

TEST(Geometry, DescribeForestListsInterfaceSets) {
  const std::string d = describe_forest(geometry("slit.json"));
  EXPECT_NE(d.find("4 roots"), std::string::npos);
  EXPECT_NE(d.find("J_"), std::string::npos);
}
