#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdpm/errors.hpp"

namespace mdpm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Frame {
  Vec origin;
  Mat tangents;  // n x d, orthonormal columns
  std::optional<Vec> normal;
};

struct ForestNode {
  int id = 0;
  int root_id = 0;
  int dim = 0;
  std::vector<int> descendants;
  Frame frame;
  double aperture = 1.0;
  std::map<int, int> orientation_to_parent;  // parent id -> +1 / -1

  bool is_root() const { return orientation_to_parent.empty(); }
};

struct Violation {
  std::string kind;
  std::string message;
};

class MdGeometry {
 public:
  int ambient_dim = 2;
  std::map<int, ForestNode> nodes;
  std::vector<int> roots;
  std::map<int, std::vector<int>> dim_index;
  std::map<int, std::vector<int>> interface_sets;
  std::map<std::pair<int, int>, double> volume_weights;
  std::vector<Vec> boundary;

  const ForestNode& node(int id) const;
  bool has_node(int id) const { return nodes.count(id) > 0; }

  // The root of the DAG that contains node j (the DAG root, not s_j).
  int dag_root(int j) const;
  // ω_i^j; entries absent from the file default to 1.
  double omega(int i, int j) const;
  // Fracture roots j with a node in J_i (the index set used by volume and trace rows).
  std::vector<int> adjacent_fractures(int i) const;
  // The two tangent-ordered endpoints of a 1-D root, taken from its 0-D descendants.
  std::pair<Vec, Vec> segment(int root) const;
  // Descendants of `parent` whose root id equals `s`.
  std::vector<int> descendants_with_root(int parent, int s) const;

  // Recomputes roots, dim_index, descendants and interface sets from nodes.
  void rebuild_indices();
};

// Structural parse of the JSON schema; does not check forest invariants.
MdGeometry parse_geometry(const std::string& json_text);
MdGeometry read_geometry_file(const std::string& path);
// parse + validate; throws GeometryError listing every violation.
MdGeometry load_geometry(const std::string& path);

std::vector<Violation> validate(const MdGeometry& geom);

struct Projection {
  Vec point;
  int segment = 0;
  double theta = 0.0;  // position along the segment in [0, 1]
};

// Closest point on a polyline (a single point is a degenerate polyline).
Projection project_onto_polyline(const Vec& x, const std::vector<Vec>& polyline);
Vec closest_point_projection(const Vec& x, int target, const MdGeometry& geom);

std::string describe_forest(const MdGeometry& geom);

}  // namespace mdpm
