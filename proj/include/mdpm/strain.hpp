#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mdpm/operators.hpp"

namespace mdpm {

using Mat2 = Eigen::Matrix2d;

// A deformation sampled on the extended space: one position per vertex copy, per interior
// fracture vertex and per point node.  `bulk_F` optionally carries exact derivatives at the
// triangle centroids; otherwise the piecewise-linear gradient of the copy positions is used.
struct Configuration {
  SpacePtr X;
  Vec x;
  std::map<int, Mat2> bulk_F;
  bool baseline = false;

  Vec2 position(int owner, int entity) const;
};

// side: +1 / -1 for copies on the positive / negative skin of a fracture, 0 otherwise.
using PointMap = std::function<Vec2(const Vec2& x, int side)>;
using JacobianMap = std::function<Mat2(const Vec2& x)>;

Configuration reference_configuration(const OperatorSet& ops);
Configuration configuration_from_map(const OperatorSet& ops, const PointMap& phi, const JacobianMap& dphi = {});
// Φ̲ + ε Ξu.
Configuration perturbed(const Configuration& base, const OperatorSet& ops, const MdFunction& u, double eps);

// Green-Lagrange strain on the strain space.  Throws ProjectionAmbiguous when a fracture
// midpoint has no unique closest point on a deformed side.
MdFunction finite_strain(const Configuration& phi, const Configuration& base, const OperatorSet& ops);
// Volume density on the density space; skins carry none.  Throws StrainError on inverted cells.
MdFunction volume_density(const Configuration& phi, const OperatorSet& ops);
MdFunction linearized_strain(const MdFunction& u, const OperatorSet& ops);
MdFunction linearized_volume(const MdFunction& u, const OperatorSet& ops);
// Same quantity evaluated cell by cell from the displacement, without the assembled operators.
MdFunction linearized_volume_direct(const MdFunction& u, const OperatorSet& ops);

struct ConsistencyReport {
  std::vector<double> eps, r, s;
  double slope_r = 0.0;
  double slope_s = 0.0;

  std::string to_csv() const;
};

ConsistencyReport linearization_consistency(const OperatorSet& ops, const MdFunction& u, const std::vector<double>& eps);

// Least-squares slope of log(y) against log(x); pairs with y <= 0 are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mdpm
