#include "lamfe/materials.hpp"

#include <cmath>

namespace lamfe {

bool ElasticityTensor::is_symmetric(double rel_tol) const {
  const double scale = C.cwiseAbs().maxCoeff();
  return (C - C.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double ElasticityTensor::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix6> es(C);
  return es.eigenvalues().minCoeff();
}

ElasticityTensor orthotropic_stiffness(const OrthotropicProps& p) {
  if (p.E11 <= 0 || p.E22 <= 0 || p.E33 <= 0 || p.G12 <= 0 || p.G13 <= 0 ||
      p.G23 <= 0)
    throw InvalidMaterial("orthotropic_stiffness: moduli must be positive");

  Matrix6 S = Matrix6::Zero();
  S(0, 0) = 1.0 / p.E11;
  S(1, 1) = 1.0 / p.E22;
  S(2, 2) = 1.0 / p.E33;
  S(0, 1) = S(1, 0) = -p.nu12 / p.E11;
  S(0, 2) = S(2, 0) = -p.nu13 / p.E11;
  S(1, 2) = S(2, 1) = -p.nu23 / p.E22;
  S(3, 3) = 1.0 / p.G23;
  S(4, 4) = 1.0 / p.G13;
  S(5, 5) = 1.0 / p.G12;

  Eigen::SelfAdjointEigenSolver<Matrix6> es(S);
  if (es.eigenvalues().minCoeff() <= 1e-10 * es.eigenvalues().maxCoeff())
    throw InvalidMaterial("orthotropic_stiffness: compliance not positive definite");

  ElasticityTensor t;
  t.C = S.inverse();
  t.C = 0.5 * (t.C + t.C.transpose().eval());  // exact symmetric storage
  return t;
}

ElasticityTensor isotropic_stiffness(const IsotropicProps& p) {
  if (p.E <= 0) throw InvalidMaterial("isotropic_stiffness: E must be positive");
  if (p.nu <= -1.0 || p.nu >= 0.5)
    throw InvalidMaterial("isotropic_stiffness: nu must be in (-1, 0.5)");
  const double lambda = p.E * p.nu / ((1 + p.nu) * (1 - 2 * p.nu));
  const double mu = p.E / (2 * (1 + p.nu));
  ElasticityTensor t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) t.C(i, j) = lambda;
    t.C(i, i) = lambda + 2 * mu;
    t.C(i + 3, i + 3) = mu;
  }
  return t;
}

namespace {

/// 6x6 Bond stress-transformation matrix for a 3x3 rotation R.
Matrix6 bond_matrix(const Eigen::Matrix3d& R) {
  // Voigt pair (p, q) per row/column index 0..5.
  static const int P[6] = {0, 1, 2, 1, 0, 0};
  static const int Q[6] = {0, 1, 2, 2, 2, 1};
  Matrix6 M;
  for (int a = 0; a < 6; ++a) {
    const int p = P[a], q = Q[a];
    for (int b = 0; b < 6; ++b) {
      const int r = P[b], s = Q[b];
      if (b < 3)
        M(a, b) = R(p, r) * R(q, r);
      else
        M(a, b) = R(p, r) * R(q, s) + R(p, s) * R(q, r);
    }
  }
  return M;
}

}  // namespace

ElasticityTensor rotate_stiffness(const ElasticityTensor& C, double angle_deg) {
  const double a = angle_deg * M_PI / 180.0;
  Eigen::Matrix3d R;
  R << std::cos(a), -std::sin(a), 0,  //
      std::sin(a), std::cos(a), 0,    //
      0, 0, 1;
  const Matrix6 M = bond_matrix(R);
  ElasticityTensor out;
  out.C = M * C.C * M.transpose();
  out.C = 0.5 * (out.C + out.C.transpose().eval());
  return out;
}

/// Rotates a Voigt stiffness by an arbitrary 3x3 rotation (used when
/// orienting element stiffness along the curved geometry).
Matrix6 rotate_stiffness_general(const Matrix6& C, const Eigen::Matrix3d& R) {
  const Matrix6 M = bond_matrix(R);
  Matrix6 out = M * C * M.transpose();
  return 0.5 * (out + out.transpose().eval());
}

int MaterialTag::code() const {
  switch (kind) {
    case Kind::Ply:
      return index;  // 0 .. n_plies-1
    case Kind::Interface:
      return 1000 + index;
    case Kind::ResinEdge:
      return 2000;
    case Kind::StiffLayer:
      return 2001;
  }
  return -1;
}

ElasticityTensor material_for_tag(const MaterialTag& tag,
                                  const StackingSequence& stacking,
                                  const MaterialCatalog& catalog) {
  ElasticityTensor t;
  switch (tag.kind) {
    case MaterialTag::Kind::Ply: {
      if (tag.index < 0 || tag.index >= static_cast<int>(stacking.size()))
        throw InvalidMaterial("material_for_tag: ply index outside stacking sequence");
      t = rotate_stiffness(orthotropic_stiffness(catalog.ply),
                           stacking[tag.index]);
      break;
    }
    case MaterialTag::Kind::Interface:
      t = isotropic_stiffness(catalog.interface_layer);
      break;
    case MaterialTag::Kind::ResinEdge:
      t = isotropic_stiffness(catalog.resin_edge);
      break;
    case MaterialTag::Kind::StiffLayer: {
      IsotropicProps p = catalog.resin_edge;
      p.E *= catalog.stiff_layer_factor;
      t = isotropic_stiffness(p);
      break;
    }
  }
  t.C *= catalog.unit_scale;
  return t;
}

}  // namespace lamfe
