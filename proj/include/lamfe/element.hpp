#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "lamfe/materials.hpp"

namespace lamfe {

/// Local node coordinates of the 20-node serendipity hexahedron, VTK
/// quadratic-hexahedron ordering: 8 corners then 12 edge midpoints.
extern const std::array<std::array<double, 3>, 20> kSerendipityNodes;

struct BasisEval {
  std::array<double, 20> N;
  // dN[i] = gradient of shape function i w.r.t. (xi, eta, zeta)
  std::array<std::array<double, 3>, 20> dN;
};

BasisEval serendipity_basis(double xi, double eta, double zeta);

/// Tensor-product Gauss rule on [-1,1]^3.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  static QuadratureRule gauss(int points_per_direction);
  int size() const { return static_cast<int>(points.size()); }
};

struct ElementInversion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ElementCoords = Eigen::Matrix<double, 20, 3>;
using ElementMatrix = Eigen::Matrix<double, 60, 60>;

/// Orthonormal local triad at a point of an element: columns are the unit
/// arc, width and radial directions expressed in the global frame.
Eigen::Matrix3d local_triad(const Eigen::Matrix3d& jacobian);

/// Element stiffness with a constant stiffness tensor in the global frame.
ElementMatrix element_stiffness(const ElementCoords& coords, const Matrix6& C,
                                const QuadratureRule& q);

/// Element stiffness with the stiffness tensor given in the local laminate
/// frame; it is rotated by the geometric triad at every quadrature point.
ElementMatrix element_stiffness_oriented(const ElementCoords& coords,
                                         const Matrix6& C_local,
                                         const QuadratureRule& q);

/// Minimum Jacobian determinant over the rule's points; throws nothing.
double min_jacobian_det(const ElementCoords& coords, const QuadratureRule& q);

}  // namespace lamfe
