#pragma once

#include <map>
#include <string>

#include <Eigen/Sparse>

#include "mdpm/spaces.hpp"

namespace mdpm {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// diag(rows) · a · diag(cols).
SpMat diag_scale(const Vec& rows, const SpMat& a, const Vec& cols);

struct MdOperator {
  SpacePtr domain;
  SpacePtr codomain;
  SpMat matrix;  // codomain dofs x domain dofs
  std::string name;
  std::string adjoint_of;  // set when built as a weighted adjoint

  Vec apply(const Vec& x) const;
  MdFunction operator()(const MdFunction& f) const;
};

enum class MechBC { clamped, roller, free };
enum class FlowBC { noflow, drained };

// Conditions on the edges of the boundary polygon, keyed by edge index (edge k joins
// vertices k and k+1).  Edges not listed are clamped / no-flow.
struct BoundaryConditions {
  std::map<int, MechBC> mech;
  std::map<int, FlowBC> flow;

  MechBC mech_on(int edge) const;
  FlowBC flow_on(int edge) const;
};

MechBC parse_mech_bc(const std::string& s);
FlowBC parse_flow_bc(const std::string& s);

// Diagonal masks selecting the unconstrained vector / flux dofs.
Vec displacement_mask(const MdSpace& U, const BoundaryConditions& bc);
Vec flux_mask(const MdSpace& Q, const BoundaryConditions& bc);

// k = 0: jump of vector functions into the fracture blocks of the tensor space.
MdOperator assemble_jump_vector(SpacePtr U, SpacePtr E);
// k = n-1: interface-flux jump rows into lower-dimensional density cells.
MdOperator assemble_jump_flux(SpacePtr Q, SpacePtr P);
MdOperator assemble_local_gradient(SpacePtr U, SpacePtr E);
MdOperator assemble_local_divergence(SpacePtr Q, SpacePtr P);
MdOperator assemble_gradient(SpacePtr U, SpacePtr E);
MdOperator assemble_divergence(SpacePtr Q, SpacePtr P);
// Projection of the full tensor space onto the symmetric-constrained strain space.
MdOperator assemble_symmetrizer(SpacePtr E, SpacePtr G);
MdOperator assemble_symmetric_gradient(SpacePtr U, SpacePtr E, SpacePtr G);
MdOperator assemble_matrix_trace(SpacePtr G, SpacePtr P);
MdOperator assemble_extension(SpacePtr U, SpacePtr X);
MdOperator assemble_restriction(SpacePtr X, SpacePtr U);

MdOperator apply_column_mask(const MdOperator& op, const Vec& mask, const std::string& name);
// -M_dom^{-1} A^T M_cod for A: dom -> cod.
MdOperator weighted_negative_adjoint(const MdOperator& a, const std::string& name);
// M_dom^{-1} A^T M_cod (the plain weighted adjoint, used for the matrix trace).
MdOperator weighted_adjoint(const MdOperator& a, const std::string& name);

struct CoOperators {
  MdOperator co_divergence;  // 𝔻 : P -> Q
  MdOperator co_gradient;    // 𝔻· : E -> U
};
CoOperators assemble_co_ops(const MdOperator& grad_bc, const MdOperator& div_bc);
MdOperator assemble_co_symmetric_gradient(const MdOperator& symgrad_bc);

struct OperatorSet {
  std::shared_ptr<const MdMesh> mesh;
  BoundaryConditions bc;
  SpacePtr P, Q, U, G, E, X;
  Vec mask_u, mask_q;
  MdOperator grad, grad_bc, co_grad;
  MdOperator div, div_bc, co_div;
  MdOperator sym, symgrad, symgrad_bc, co_symgrad;
  MdOperator trace_t, trace;  // 𝔗′ and 𝔗
  MdOperator extension, restriction;
};

OperatorSet assemble_operators(std::shared_ptr<const MdMesh> mesh, const BoundaryConditions& bc = {});

// Max-norm of M_cod A + B^T M_dom for B the claimed negative adjoint of A.
double adjoint_residual(const MdOperator& a, const MdOperator& b);

void save_matrix_market(const MdOperator& op, const std::string& path);

}  // namespace mdpm
