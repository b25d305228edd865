#pragma once

#include <array>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mdpm/geometry.hpp"

namespace mdpm {

using Vec2 = Eigen::Vector2d;

struct BulkTriangle {
  std::array<int, 3> v{};
  std::array<int, 3> copy{};  // vertex copy used by this triangle at each corner
  std::array<int, 3> edge{};  // edges (v0 v1), (v1 v2), (v2 v0)
  double area = 0.0;
  Vec2 centroid = Vec2::Zero();
  Eigen::Matrix<double, 3, 2> grad = Eigen::Matrix<double, 3, 2>::Zero();  // barycentric gradients
};

enum class EdgeKind { interior, boundary, fracture };

struct MeshEdge {
  std::array<int, 2> v{};
  EdgeKind kind = EdgeKind::interior;
  int tri_minus = -1;  // the normal points from tri_minus towards tri_plus (outward on the boundary)
  int tri_plus = -1;
  Vec2 normal = Vec2::Zero();
  Vec2 midpoint = Vec2::Zero();
  double length = 0.0;
  int boundary_index = -1;
  int fracture_root = -1;
  int fracture_cell = -1;
};

struct FractureCell {
  int index = 0;
  std::array<int, 2> v{};  // ordered along the fracture tangent
  int edge = -1;
  int tri_plus = -1;
  int tri_minus = -1;
  std::array<int, 2> copy_plus{};
  std::array<int, 2> copy_minus{};
  double length = 0.0;
  Vec2 midpoint = Vec2::Zero();
};

struct FractureMesh {
  int root = 0;
  int skin_plus = 0;
  int skin_minus = 0;
  int start_node = 0;  // 0-D descendants of the fracture at its two ends
  int end_node = 0;
  int start_root = 0;  // the 0-D roots they belong to
  int end_root = 0;
  Vec2 tangent = Vec2::Zero();
  Vec2 normal = Vec2::Zero();
  double aperture = 1.0;
  std::vector<int> vertices;  // grid vertices v_0 .. v_m along the tangent
  std::vector<FractureCell> cells;
};

struct VertexCopy {
  int vertex = 0;
  int owner = 0;  // node of the bulk DAG that owns this copy
  std::vector<int> tris;
};

struct PointCell {
  int node = 0;
  int vertex = 0;
  Vec2 x = Vec2::Zero();
};

class MdMesh {
 public:
  std::shared_ptr<const MdGeometry> geom;
  double h = 0.0;
  int nx = 0;
  int ny = 0;
  int bulk_root = 0;
  std::vector<Vec2> vertices;
  std::vector<BulkTriangle> tris;
  std::vector<MeshEdge> edges;
  std::map<int, FractureMesh> fractures;
  std::vector<VertexCopy> copies;                  // sorted by owner node, then vertex
  std::vector<std::vector<int>> vertex_copies;     // copies located at each grid vertex
  std::map<int, PointCell> points;                 // 0-D roots
  std::map<int, std::pair<int, int>> skin_side;    // skin node -> (fracture root, side sign)

  int num_boundary_edges() const;
  double max_cell_diameter() const;
  const FractureMesh& fracture(int root) const { return fractures.at(root); }
};

MdMesh build_mesh(std::shared_ptr<const MdGeometry> geom, double h);
MdMesh build_mesh(const MdGeometry& geom, double h);

}  // namespace mdpm
