#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace lamfe {

using Matrix6 = Eigen::Matrix<double, 6, 6>;

struct InvalidMaterial : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Engineering constants of an orthotropic ply. Axis 1 is the fibre
/// direction (aligned with the arc direction s at 0 deg), axis 3 the
/// through-thickness direction r.
struct OrthotropicProps {
  double E11, E22, E33;
  double G12, G13, G23;
  double nu12, nu13, nu23;

  bool operator==(const OrthotropicProps&) const = default;
};

struct IsotropicProps {
  double E;
  double nu;

  bool operator==(const IsotropicProps&) const = default;
};

/// 6x6 stiffness in Voigt notation. Component order is
/// (11, 22, 33, 23, 13, 12) with engineering shear strains.
struct ElasticityTensor {
  Matrix6 C = Matrix6::Zero();

  bool is_symmetric(double rel_tol = 1e-12) const;
  double min_eigenvalue() const;
};

/// Ordered ply fibre angles, degrees, innermost to outermost.
using StackingSequence = std::vector<double>;

ElasticityTensor orthotropic_stiffness(const OrthotropicProps& p);
ElasticityTensor isotropic_stiffness(const IsotropicProps& p);

/// Rotates a Voigt stiffness about the through-thickness axis (axis 3) by
/// the given ply angle, using the 6x6 Bond transformation.
ElasticityTensor rotate_stiffness(const ElasticityTensor& C, double angle_deg);

/// Same transformation for an arbitrary rotation matrix (columns = local
/// axes expressed in the target frame).
Matrix6 rotate_stiffness_general(const Matrix6& C, const Eigen::Matrix3d& R);

/// Element material tags. Ply and interface indices count from the inner
/// radius, 0-based.
struct MaterialTag {
  enum class Kind { Ply, Interface, ResinEdge, StiffLayer };
  Kind kind = Kind::Ply;
  int index = 0;  // ply or interface index; unused otherwise

  bool operator==(const MaterialTag&) const = default;
  int code() const;  // compact integer for output files
};

struct MaterialCatalog {
  OrthotropicProps ply{162, 10, 10, 5.2, 5.2, 3.5, 0.35, 0.35, 0.5};
  IsotropicProps interface_layer{10, 0.35};
  IsotropicProps resin_edge{8.5, 0.35};
  double stiff_layer_factor = 1e3;  // multiplies the resin-edge modulus
  double unit_scale = 1.0;  // e.g. 1e3 to turn GPa inputs into MPa

  bool operator==(const MaterialCatalog&) const = default;
};

/// Resolves the stiffness tensor for a mesh material tag, in the local
/// laminate (s, l, r) frame. Ply tags are rotated by their stacking angle.
ElasticityTensor material_for_tag(const MaterialTag& tag,
                                  const StackingSequence& stacking,
                                  const MaterialCatalog& catalog);

}  // namespace lamfe
