#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdpm/mesh.hpp"

namespace mdpm {

// Density: k = n, p = 1 (pressures, mass).  Flux: k = n-1, p = 1.  Vector: k = 0, p = n
// (displacement, velocity).  Strain: k = 1, p = n in the symmetric-constrained form (strain,
// stress).  Tensor: k = 1, p = n before symmetrization (range of the full gradient).
// Extended: every node of the forest carries vertex positions (range of the extension).
enum class SpaceKind { Density, Flux, Vector, Strain, Tensor, Extended };

const char* to_string(SpaceKind kind);

struct Block {
  int node = 0;
  int offset = 0;
  int length = 0;
  int comps = 1;  // values per entity
};

// What a single degree of freedom describes.  `entity` is a triangle, edge, fracture cell,
// fracture vertex position, vertex copy or 0 for point cells, depending on the block.
struct DofInfo {
  int node = 0;
  int entity = 0;
  int comp = 0;
};

class MdSpace {
 public:
  SpaceKind kind = SpaceKind::Density;
  int k = 0;
  int p = 1;
  std::shared_ptr<const MdMesh> mesh;
  std::vector<int> member_nodes;
  std::map<int, Block> blocks;
  std::vector<DofInfo> dofs;
  Vec weights;
  std::map<std::pair<int, int>, int> entity_offset;  // (node, entity) -> first dof

  int size() const { return static_cast<int>(dofs.size()); }
  const Block& block(int node) const;
  bool is_member(int node) const { return blocks.count(node) > 0; }
  int dof(int node, int entity, int comp = 0) const;
  // Local form order k_j = d_i - (n - k) for member j in the DAG rooted at i.
  int local_order(int node) const;
  Eigen::DiagonalMatrix<double, Eigen::Dynamic> mass() const { return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(weights); }
};

using SpacePtr = std::shared_ptr<const MdSpace>;

// The k-forest: nodes j with d_i >= n - k and d_i - d_j <= n - k, i the DAG root of j.
std::vector<int> k_forest(const MdGeometry& geom, int k);

SpacePtr build_space(std::shared_ptr<const MdMesh> mesh, int k, int p);
SpacePtr build_space(std::shared_ptr<const MdMesh> mesh, SpaceKind kind);

struct MdFunction {
  SpacePtr space;
  Vec coeffs;

  MdFunction() = default;
  explicit MdFunction(SpacePtr s) : space(std::move(s)), coeffs(Vec::Zero(space->size())) {}
  MdFunction(SpacePtr s, Vec c);

  Eigen::VectorBlock<Vec> restrict(int node);
  Eigen::VectorBlock<const Vec> restrict(int node) const;
};

MdFunction operator+(const MdFunction& a, const MdFunction& b);
MdFunction operator-(const MdFunction& a, const MdFunction& b);
MdFunction operator*(double s, const MdFunction& a);

double inner_product(const MdFunction& a, const MdFunction& b);
double norm(const MdFunction& a);
double weighted_dot(const MdSpace& space, const Vec& a, const Vec& b);

void write_csv(const MdFunction& f, const std::string& path);
std::string to_csv(const MdFunction& f);

}  // namespace mdpm
