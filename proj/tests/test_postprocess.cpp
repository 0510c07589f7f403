#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "lamfe/assembly.hpp"
#include "lamfe/mesh.hpp"
#include "lamfe/postprocess.hpp"

using namespace lamfe;

namespace {

CornerGeometry small_geom() {
  CornerGeometry g;
  g.width_W = 6.0;
  g.limb_length_L = 2.0;
  g.inner_radius_R = 6.6;
  g.n_plies = 3;
  return g;
}

MeshSpec small_spec() {
  MeshSpec s;
  s.n_elems_arc = 4;
  s.n_elems_limb = 1;
  s.n_elems_width = 3;
  return s;
}

MaterialCatalog homogeneous_catalog(double E, double nu) {
  MaterialCatalog cat;
  const double G = E / (2 * (1 + nu));
  cat.ply = {E, E, E, G, G, G, nu, nu, nu};
  cat.interface_layer = {E, nu};
  cat.resin_edge = {E, nu};
  return cat;
}

// Nodal displacement vector for an affine field u = A x + b.
std::vector<double> affine_field(const StructuredMesh& mesh, const DofMap& dofs,
                                 const double A[3][3],
                                 const double b[3]) {
  std::vector<double> u(dofs.n_dofs, 0.0);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const auto& x = mesh.nodes[n];
    for (int c = 0; c < 3; ++c)
      u[dofs.dof(n, c)] =
          A[c][0] * x[0] + A[c][1] * x[1] + A[c][2] * x[2] + b[c];
  }
  return u;
}

}  // namespace

TEST_CASE("damage-onset criterion unit values") {
  const FailureAllowables a;
  CHECK(camanho_criterion(61.0, 0.0, 0.0, a) == 1.0);
  CHECK(camanho_criterion(0.0, 97.0, 0.0, a) == 1.0);
  CHECK(camanho_criterion(0.0, 0.0, 97.0, a) == 1.0);
  CHECK(camanho_criterion(-50.0, 0.0, 0.0, a) == 0.0);
  CHECK(camanho_criterion(0.0, 0.0, 0.0, a) == 0.0);
}

TEST_CASE("criterion is shear-sign invariant and compression-blind") {
  const FailureAllowables a;
  CHECK(camanho_criterion(10.0, 20.0, -30.0, a) ==
        camanho_criterion(10.0, -20.0, 30.0, a));
  CHECK(camanho_criterion(-99.0, 20.0, 30.0, a) ==
        camanho_criterion(0.0, 20.0, 30.0, a));
  // Quadratic combination against a hand value.
  const double f = camanho_criterion(30.5, 48.5, 0.0, a);
  CHECK(f == doctest::Approx(std::sqrt(0.25 + 0.25)).epsilon(1e-12));
  // Linear in a proportional load factor.
  CHECK(camanho_criterion(2 * 30.5, 2 * 48.5, 0.0, a) ==
        doctest::Approx(2 * f).epsilon(1e-12));
}

TEST_CASE("rigid motion produces negligible stress") {
  const auto g = small_geom();
  const StackingSequence stacking{45, -45, 0};
  const MaterialCatalog cat;  // laminate materials, GPa scale
  const auto mesh = build_mesh(g, small_spec(), std::nullopt, stacking);
  const auto dofs = build_dofmap(mesh);
  const auto q = QuadratureRule::gauss(3);
  // Small rotation + translation.
  const double w = 1e-3;
  const double A[3][3] = {{0, -w, 0}, {w, 0, w}, {0, -w, 0}};
  const double b[3] = {0.4, -0.2, 0.1};
  const auto u = affine_field(mesh, dofs, A, b);
  const auto field = recover_stress(u, mesh, dofs, stacking, cat, q);
  const double E = cat.ply.E11;
  for (const auto& s : field.qp_stress)
    for (double c : s) CHECK(std::abs(c) < 1e-8 * E);
}

TEST_CASE("hydrostatic expansion gives zero shear and equal normals") {
  const auto g = small_geom();
  const StackingSequence stacking{0, 0, 0};
  const auto cat = homogeneous_catalog(10.0, 0.3);
  const auto mesh = build_mesh(g, small_spec(), std::nullopt, stacking);
  const auto dofs = build_dofmap(mesh);
  const double c = 1e-3;
  const double A[3][3] = {{c, 0, 0}, {0, c, 0}, {0, 0, c}};
  const double b[3] = {0, 0, 0};
  const auto u = affine_field(mesh, dofs, A, b);
  const auto field =
      recover_stress(u, mesh, dofs, stacking, cat, QuadratureRule::gauss(3));
  const double lam = 10.0 * 0.3 / (1.3 * 0.4);
  const double mu = 10.0 / 2.6;
  const double p = (3 * lam + 2 * mu) * c;
  for (const auto& s : field.qp_stress) {
    for (int k = 0; k < 3; ++k) CHECK(s[k] == doctest::Approx(p).epsilon(1e-8));
    for (int k = 3; k < 6; ++k) CHECK(std::abs(s[k]) < 1e-8 * p);
  }
}

TEST_CASE("uniaxial strain reproduces Hooke's law on the flat laminate") {
  const auto g = small_geom();
  const StackingSequence stacking{0, 0, 0};
  const double E = 10.0, nu = 0.3;
  const auto cat = homogeneous_catalog(E, nu);
  const auto mesh = build_flat_laminate(g, small_spec(), 5.0, stacking);
  const auto dofs = build_dofmap(mesh);
  const double eps = 2e-3;
  const double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, eps}};
  const double b[3] = {0, 0, 0};
  const auto u = affine_field(mesh, dofs, A, b);
  const auto field =
      recover_stress(u, mesh, dofs, stacking, cat, QuadratureRule::gauss(3));
  const double lam = E * nu / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));
  // z is the thickness (r) direction of the flat build.
  for (const auto& s : field.qp_stress) {
    CHECK(s[2] == doctest::Approx((lam + 2 * mu) * eps).epsilon(1e-8));
    CHECK(s[0] == doctest::Approx(lam * eps).epsilon(1e-8));
    CHECK(s[1] == doctest::Approx(lam * eps).epsilon(1e-8));
    for (int k = 3; k < 6; ++k) CHECK(std::abs(s[k]) < 1e-8 * E);
  }
  // Nodal recovery reproduces the constant state too.
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (const auto& entry : field.nodal[n])
      CHECK(entry.stress[2] ==
            doctest::Approx((lam + 2 * mu) * eps).epsilon(1e-6));
}

TEST_CASE("stress scales linearly with the displacement") {
  const auto g = small_geom();
  const StackingSequence stacking{45, -45, 0};
  const MaterialCatalog cat;
  const auto mesh = build_mesh(g, small_spec(), std::nullopt, stacking);
  const auto dofs = build_dofmap(mesh);
  const double A[3][3] = {{1e-3, 2e-4, 0}, {0, -1e-3, 3e-4}, {0, 0, 5e-4}};
  const double b[3] = {0, 0, 0};
  auto u = affine_field(mesh, dofs, A, b);
  const auto q = QuadratureRule::gauss(3);
  const auto f1 = recover_stress(u, mesh, dofs, stacking, cat, q);
  for (auto& ui : u) ui *= 3.0;
  const auto f3 = recover_stress(u, mesh, dofs, stacking, cat, q);
  for (std::size_t k = 0; k < f1.qp_stress.size(); ++k)
    for (int c = 0; c < 6; ++c)
      CHECK(f3.qp_stress[k][c] ==
            doctest::Approx(3.0 * f1.qp_stress[k][c]).epsilon(1e-10).scale(
                cat.ply.E11 * 1e-3));
}

TEST_CASE("nodes on layer boundaries carry one value per material region") {
  const auto g = small_geom();
  const StackingSequence stacking{45, -45, 0};
  const MaterialCatalog cat;
  const auto mesh = build_mesh(g, small_spec(), std::nullopt, stacking);
  const auto dofs = build_dofmap(mesh);
  std::vector<double> u(dofs.n_dofs, 0.0);
  const auto field =
      recover_stress(u, mesh, dofs, stacking, cat, QuadratureRule::gauss(3));
  int multi = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    REQUIRE(!field.nodal[n].empty());
    if (field.nodal[n].size() >= 2) {
      ++multi;
      CHECK(field.nodal[n][0].material_code != field.nodal[n][1].material_code);
      CHECK(field.nodal_stress(n, field.nodal[n][1].material_code) != nullptr);
    }
  }
  CHECK(multi > 0);
  CHECK(field.nodal_stress(0, -12345) == nullptr);
}

namespace {

// A zero field on a real mesh with one interface quadrature point overridden.
struct Synthetic {
  StructuredMesh mesh;
  StressField field;
  int elem = -1, qp = 0;
};

Synthetic synthetic_interface_peak(const Stress6& peak) {
  Synthetic s;
  const StackingSequence stacking{45, -45, 0};
  const MaterialCatalog cat;
  s.mesh = build_mesh(small_geom(), small_spec(), std::nullopt, stacking);
  const auto dofs = build_dofmap(s.mesh);
  std::vector<double> u(dofs.n_dofs, 0.0);
  s.field = recover_stress(u, s.mesh, dofs, stacking, cat,
                           QuadratureRule::gauss(3));
  for (int e = 0; e < s.mesh.n_elems(); ++e)
    if (s.mesh.material[e].kind == MaterialTag::Kind::Interface &&
        s.mesh.material[e].index == 1) {
      s.elem = e;
      break;
    }
  REQUIRE(s.elem >= 0);
  s.field.qp_stress[s.elem * s.field.nqp + s.qp] = peak;
  return s;
}

}  // namespace

TEST_CASE("failure evaluation finds the peak and scales the moment") {
  // F = 2 at the chosen point: sigma_r = 2 * 61.
  Synthetic s = synthetic_interface_peak({0, 0, 122.0, 0, 0, 0});
  const FailureResult res =
      evaluate_failure(s.field, s.mesh, FailureAllowables{}, 96.8);
  CHECK(res.F_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.elem == s.elem);
  CHECK(res.qp == s.qp);
  // Interface index 1 of 2 in a 3-ply laminate: outermost interface is 1.
  CHECK(res.interface_from_outer == 1);
  CHECK(res.M_applied == 96.8);
  CHECK(res.M_fail == doctest::Approx(48.4).epsilon(1e-12));
  CHECK(res.peak_stress[2] == 122.0);
  // Peak locations come from the quadrature-point geometry; limb points
  // extend past +-45 degrees by the mm offset times the degree scale.
  CHECK(std::abs(res.arc_pos_deg) <=
        45.0 + 90.0 * s.mesh.geometry.limb_length_L);
  CHECK(res.r_mm > s.mesh.geometry.inner_radius_R);
  CHECK(res.r_mm < s.mesh.geometry.outer_radius());
}

TEST_CASE("zero stress yields the infinite-moment sentinel") {
  Synthetic s = synthetic_interface_peak({0, 0, 0, 0, 0, 0});
  const FailureResult res =
      evaluate_failure(s.field, s.mesh, FailureAllowables{}, 50.0);
  CHECK(res.F_max == 0.0);
  CHECK(std::isinf(res.M_fail));
}

TEST_CASE("failure evaluation only sees interface points") {
  // A huge ply stress must not win over a modest interface stress.
  Synthetic s = synthetic_interface_peak({0, 0, 61.0, 0, 0, 0});
  for (int e = 0; e < s.mesh.n_elems(); ++e)
    if (s.mesh.material[e].kind == MaterialTag::Kind::Ply) {
      s.field.qp_stress[e * s.field.nqp] = {0, 0, 1e6, 0, 0, 0};
      break;
    }
  const FailureResult res =
      evaluate_failure(s.field, s.mesh, FailureAllowables{}, 10.0);
  CHECK(res.F_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.elem == s.elem);
}

TEST_CASE("through-thickness profile is ordered outer to inner") {
  Synthetic s = synthetic_interface_peak({0, 0, 61.0, 0, 0, 0});
  const auto profile =
      extract_line(s.field, s.mesh, FailureAllowables{}, 0.0, 3.0);
  REQUIRE(profile.size() >= std::size_t(s.mesh.n_r));
  for (std::size_t k = 1; k < profile.size(); ++k)
    CHECK(profile[k].r < profile[k - 1].r);
  const auto& g = s.mesh.geometry;
  CHECK(profile.front().r <= g.outer_radius());
  CHECK(profile.back().r >= g.inner_radius_R);
  CHECK_THROWS_AS(
      extract_line(s.field, s.mesh, FailureAllowables{}, 80.0, 3.0),
      OutOfDomain);
  CHECK_THROWS_AS(
      extract_line(s.field, s.mesh, FailureAllowables{}, 0.0, 100.0),
      OutOfDomain);
}

TEST_CASE("csv writers emit stable headers and one row per record") {
  Synthetic s = synthetic_interface_peak({10, 0, 30.0, 5, 0, 0});
  const FailureResult res =
      evaluate_failure(s.field, s.mesh, FailureAllowables{}, 96.8);
  const auto profile =
      extract_line(s.field, s.mesh, FailureAllowables{}, 0.0, 3.0);

  const std::string ppath = "/tmp/lamfe_test_profile.csv";
  write_profile_csv(ppath, profile);
  std::ifstream pf(ppath);
  std::string line;
  REQUIRE(std::getline(pf, line));
  CHECK(line ==
        "r_mm,sigma_s,sigma_l,sigma_r,tau_sl,tau_rs,tau_rl,F,material_tag");
  int rows = 0;
  while (std::getline(pf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == int(profile.size()));

  const std::string fpath = "/tmp/lamfe_test_failure.csv";
  write_failure_csv(fpath, res, 4.0, 0.123);
  std::ifstream ff(fpath);
  REQUIRE(std::getline(ff, line));
  CHECK(line.substr(0, 16) == "defect_slope_deg");
  rows = 0;
  while (std::getline(ff, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 1);
  std::remove(ppath.c_str());
  std::remove(fpath.c_str());
}
