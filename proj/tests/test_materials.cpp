#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "lamfe/materials.hpp"

using namespace lamfe;

namespace {

// Independent oracle: expand the 6x6 Voigt stiffness to the full 4th-order
// tensor, rotate component-wise with C'_ijkl = R_ia R_jb R_kc R_ld C_abcd,
// and contract back to Voigt. Engineering shear strains are handled by the
// Voigt weight bookkeeping below.
const int kVoigtPair[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};

int voigt_index(int i, int j) {
  if (i == j) return i;
  const int s = i + j;  // 3 -> 23, 2 -> 13, 1 -> 12
  if (s == 3) return 3;
  if (s == 2) return 4;
  return 5;
}

Matrix6 rotate_voigt_oracle(const Matrix6& C, const Eigen::Matrix3d& R) {
  double T[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          T[i][j][k][l] = C(voigt_index(i, j), voigt_index(k, l));

  double Tr[3][3][3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d)
                  s += R(i, a) * R(j, b) * R(k, c) * R(l, d) * T[a][b][c][d];
          Tr[i][j][k][l] = s;
        }

  Matrix6 out;
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q)
      out(p, q) = Tr[kVoigtPair[p][0]][kVoigtPair[p][1]]
                    [kVoigtPair[q][0]][kVoigtPair[q][1]];
  return out;
}

// Independent oracle: orthotropic compliance from engineering constants,
// inverted numerically.
Matrix6 orthotropic_oracle(const OrthotropicProps& p) {
  Matrix6 S = Matrix6::Zero();
  S(0, 0) = 1 / p.E11;
  S(1, 1) = 1 / p.E22;
  S(2, 2) = 1 / p.E33;
  S(0, 1) = S(1, 0) = -p.nu12 / p.E11;
  S(0, 2) = S(2, 0) = -p.nu13 / p.E11;
  S(1, 2) = S(2, 1) = -p.nu23 / p.E22;
  S(3, 3) = 1 / p.G23;
  S(4, 4) = 1 / p.G13;
  S(5, 5) = 1 / p.G12;
  return S.inverse();
}

OrthotropicProps table_ply() { return MaterialCatalog{}.ply; }

}  // namespace

TEST_CASE("orthotropic stiffness matches compliance inversion") {
  const auto p = table_ply();
  const Matrix6 C = orthotropic_stiffness(p).C;
  const Matrix6 oracle = orthotropic_oracle(p);
  CHECK((C - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("isotropic stiffness reproduces Hooke's law") {
  const IsotropicProps p{10.0, 0.35};
  const Matrix6 C = isotropic_stiffness(p).C;
  // Uniaxial strain of a constrained bar: sigma_11 from the Lame form.
  const double lam = p.E * p.nu / ((1 + p.nu) * (1 - 2 * p.nu));
  const double mu = p.E / (2 * (1 + p.nu));
  CHECK(C(0, 0) == doctest::Approx(lam + 2 * mu).epsilon(1e-13));
  CHECK(C(0, 1) == doctest::Approx(lam).epsilon(1e-13));
  CHECK(C(3, 3) == doctest::Approx(mu).epsilon(1e-13));
  // Isotropy: invariant under any rotation.
  Eigen::Matrix3d R =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized())
          .toRotationMatrix();
  const Matrix6 Cr = rotate_stiffness_general(C, R);
  CHECK((Cr - C).cwiseAbs().maxCoeff() < 1e-12 * C.cwiseAbs().maxCoeff());
}

TEST_CASE("ply rotation about the thickness axis matches the tensor oracle") {
  const Matrix6 C0 = orthotropic_stiffness(table_ply()).C;
  for (double deg : {45.0, -45.0, 30.0, 90.0}) {
    CAPTURE(deg);
    const double a = deg * M_PI / 180.0;
    Eigen::Matrix3d R;
    // Columns are the rotated material axes in the laminate frame.
    R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    const Matrix6 oracle = rotate_voigt_oracle(C0, R);
    const Matrix6 got = rotate_stiffness(ElasticityTensor{C0}, deg).C;
    CHECK((got - oracle).cwiseAbs().maxCoeff() /
              oracle.cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("general rotation matches the tensor oracle") {
  const Matrix6 C0 = orthotropic_stiffness(table_ply()).C;
  const Eigen::Matrix3d R =
      Eigen::AngleAxisd(0.9, Eigen::Vector3d(2, -1, 1).normalized())
          .toRotationMatrix();
  const Matrix6 oracle = rotate_voigt_oracle(C0, R);
  const Matrix6 got = rotate_stiffness_general(C0, R);
  CHECK((got - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("rotation preserves symmetry and positive definiteness") {
  const ElasticityTensor C0 = orthotropic_stiffness(table_ply());
  CHECK(C0.is_symmetric());
  CHECK(C0.min_eigenvalue() > 0);
  const ElasticityTensor C = rotate_stiffness(C0, 37.0);
  CHECK(C.is_symmetric());
  CHECK(C.min_eigenvalue() > 0);
  // 90-degree rotation swaps the in-plane normal directions.
  const Matrix6 C90 = rotate_stiffness(C0, 90.0).C;
  CHECK(C90(0, 0) == doctest::Approx(C0.C(1, 1)).epsilon(1e-12));
  CHECK(C90(1, 1) == doctest::Approx(C0.C(0, 0)).epsilon(1e-12));
  CHECK(C90(2, 2) == doctest::Approx(C0.C(2, 2)).epsilon(1e-12));
  // 360 degrees is the identity.
  const Matrix6 Cf = rotate_stiffness(C0, 360.0).C;
  CHECK((Cf - C0.C).cwiseAbs().maxCoeff() < 1e-10 * C0.C.cwiseAbs().maxCoeff());
}

TEST_CASE("material_for_tag resolves tags and the unit scale") {
  MaterialCatalog cat;
  cat.unit_scale = 1e3;
  const StackingSequence stacking{45, -45, 0};

  const Matrix6 ply45 = material_for_tag({MaterialTag::Kind::Ply, 0},
                                         stacking, cat)
                            .C;
  Matrix6 oracle =
      rotate_stiffness(orthotropic_stiffness(cat.ply), 45.0).C * 1e3;
  CHECK((ply45 - oracle).cwiseAbs().maxCoeff() <
        1e-12 * oracle.cwiseAbs().maxCoeff());

  const Matrix6 iface =
      material_for_tag({MaterialTag::Kind::Interface, 0}, stacking, cat).C;
  CHECK((iface - isotropic_stiffness(cat.interface_layer).C * 1e3)
            .cwiseAbs()
            .maxCoeff() < 1e-12 * iface.cwiseAbs().maxCoeff());

  const Matrix6 stiff =
      material_for_tag({MaterialTag::Kind::StiffLayer, 0}, stacking, cat).C;
  const Matrix6 resin =
      material_for_tag({MaterialTag::Kind::ResinEdge, 0}, stacking, cat).C;
  CHECK((stiff - resin * cat.stiff_layer_factor).cwiseAbs().maxCoeff() <
        1e-9 * stiff.cwiseAbs().maxCoeff());
}

TEST_CASE("material tag codes are unique and stable") {
  const MaterialTag ply3{MaterialTag::Kind::Ply, 3};
  const MaterialTag iface3{MaterialTag::Kind::Interface, 3};
  const MaterialTag resin{MaterialTag::Kind::ResinEdge, 0};
  const MaterialTag stiff{MaterialTag::Kind::StiffLayer, 0};
  CHECK(ply3.code() != iface3.code());
  CHECK(resin.code() != stiff.code());
  CHECK(ply3.code() != MaterialTag{MaterialTag::Kind::Ply, 4}.code());
}
