#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "lamfe/assembly.hpp"
#include "lamfe/element.hpp"
#include "lamfe/mesh.hpp"
#include "lamfe/sparse.hpp"

using namespace lamfe;

namespace {

CornerGeometry small_geom() {
  CornerGeometry g;
  g.width_W = 4.0;
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

// Catalog whose every region behaves as one isotropic material, so a flat
// laminate mesh becomes a homogeneous block.
MaterialCatalog homogeneous_catalog(double E, double nu) {
  MaterialCatalog cat;
  const double G = E / (2 * (1 + nu));
  cat.ply = {E, E, E, G, G, G, nu, nu, nu};
  cat.interface_layer = {E, nu};
  cat.resin_edge = {E, nu};
  return cat;
}

// Dirichlet-driven solve: prescribe u on the given nodes, solve for the
// rest. Built from the public pieces so it does not reuse the assembly
// module's own elimination.
std::vector<double> solve_with_prescribed(
    const SparseSystem& sys, const StructuredMesh& mesh,
    const std::vector<int>& bc_nodes,
    const std::function<std::array<double, 3>(double, double, double)>& field) {
  const int n = sys.K.n;
  std::vector<char> is_bc(n, 0);
  std::vector<double> u(n, 0.0);
  for (int node : bc_nodes) {
    const auto& x = mesh.nodes[node];
    const auto v = field(x[0], x[1], x[2]);
    for (int c = 0; c < 3; ++c) {
      const int d = sys.dofs.dof(node, c);
      is_bc[d] = 1;
      u[d] = v[c];
    }
  }
  std::vector<int> interior;
  for (int d = 0; d < n; ++d)
    if (!is_bc[d]) interior.push_back(d);

  // r_I = f_I - (K u_bc)_I
  std::vector<double> Ku = spmv(sys.K, u);
  std::vector<double> rhs(interior.size());
  for (std::size_t k = 0; k < interior.size(); ++k)
    rhs[k] = sys.f[interior[k]] - Ku[interior[k]];
  const DirectFactor fac(sys.K.submatrix(interior));
  const std::vector<double> ui = fac.solve(rhs);
  for (std::size_t k = 0; k < interior.size(); ++k) u[interior[k]] = ui[k];
  return u;
}

}  // namespace

TEST_CASE("serendipity basis: partition of unity and node interpolation") {
  const auto q = QuadratureRule::gauss(3);
  for (const auto& pt : q.points) {
    const BasisEval b = serendipity_basis(pt[0], pt[1], pt[2]);
    double sum = 0;
    std::array<double, 3> dsum{};
    for (int i = 0; i < 20; ++i) {
      sum += b.N[i];
      for (int c = 0; c < 3; ++c) dsum[c] += b.dN[i][c];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(dsum[c]) < 1e-12);
  }
  // Kronecker property at the nodes.
  for (int j = 0; j < 20; ++j) {
    const auto& xi = kSerendipityNodes[j];
    const BasisEval b = serendipity_basis(xi[0], xi[1], xi[2]);
    for (int i = 0; i < 20; ++i)
      CHECK(b.N[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-13));
  }
}

TEST_CASE("single elements carry exactly six rigid-body modes") {
  // Curved elements from an actual corner mesh, with the laminate materials.
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  MaterialCatalog cat;  // orthotropic ply + isotropic interface
  const auto q = QuadratureRule::gauss(3);
  // One ply element and one interface element.
  std::vector<int> picks;
  for (int e = 0; e < mesh.n_elems() && picks.size() < 2; ++e) {
    const auto kind = mesh.material[e].kind;
    if ((kind == MaterialTag::Kind::Ply && picks.empty()) ||
        (kind == MaterialTag::Kind::Interface && picks.size() == 1))
      picks.push_back(e);
  }
  REQUIRE(picks.size() == 2);
  for (int e : picks) {
    CAPTURE(e);
    const ElementMatrix Ke =
        mesh_element_matrix(mesh, e, {45, -45, 0}, cat, q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ke);
    const auto& ev = es.eigenvalues();
    const double emax = ev(59);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ev(i)) / emax < 1e-8);
    // The seventh mode is a genuine deformation; for the very thin
    // interface element it is soft, but clearly above the null space.
    CHECK(ev(6) / emax > 1e-10);
    CHECK(ev(6) > 1e2 * std::abs(ev(5)));
  }
}

TEST_CASE("explicit rigid motions produce zero elastic force") {
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  const auto q = QuadratureRule::gauss(3);
  const ElementMatrix Ke = mesh_element_matrix(mesh, 2, {45, -45, 0},
                                               MaterialCatalog{}, q);
  const ElementCoords X = mesh.coords_of(2);
  const Eigen::Vector3d axis = Eigen::Vector3d(1, -2, 0.5).normalized();
  const Eigen::Vector3d trans(0.3, -0.7, 0.1);
  Eigen::Matrix<double, 60, 1> u;
  for (int i = 0; i < 20; ++i) {
    // Infinitesimal rotation + translation.
    const Eigen::Vector3d x = X.row(i).transpose();
    const Eigen::Vector3d v = trans + 1e-3 * axis.cross(x);
    u.segment<3>(3 * i) = v;
  }
  const double scale = Ke.cwiseAbs().maxCoeff() * u.cwiseAbs().maxCoeff();
  CHECK((Ke * u).cwiseAbs().maxCoeff() / scale < 1e-10);
}

TEST_CASE("patch test: linear field reproduced exactly on affine meshes") {
  CornerGeometry g = small_geom();
  MeshSpec spec = small_spec();
  const StackingSequence stacking{0, 0, 0};
  const auto cat = homogeneous_catalog(10.0, 0.3);
  const auto mesh = build_flat_laminate(g, spec, 5.0, stacking);
  auto sys = assemble(mesh, stacking, cat, QuadratureRule::gauss(3));

  auto field = [](double x, double y, double z) {
    return std::array<double, 3>{0.1 * x + 0.02 * y - 0.03 * z + 0.5,
                                 -0.04 * x + 0.05 * y + 0.01 * z,
                                 0.02 * x - 0.01 * y + 0.07 * z - 0.2};
  };
  const auto u = solve_with_prescribed(sys, mesh, mesh.boundary_nodes(), field);
  double umax = 0, err = 0;
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const auto& x = mesh.nodes[node];
    const auto v = field(x[0], x[1], x[2]);
    for (int c = 0; c < 3; ++c) {
      umax = std::max(umax, std::abs(v[c]));
      err = std::max(err, std::abs(u[sys.dofs.dof(node, c)] - v[c]));
    }
  }
  CHECK(err / umax < 1e-9);
}

TEST_CASE("quadratic manufactured solution on an affine mesh") {
  // u = (x^2, y^2, z^2): constant body force b = -(2 lambda + 4 mu) (1,1,1).
  CornerGeometry g = small_geom();
  MeshSpec spec = small_spec();
  const StackingSequence stacking{0, 0, 0};
  const double E = 10.0, nu = 0.3;
  const auto cat = homogeneous_catalog(E, nu);
  const auto mesh = build_flat_laminate(g, spec, 5.0, stacking);
  auto sys = assemble(mesh, stacking, cat, QuadratureRule::gauss(3));

  const double lam = E * nu / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));
  const double b = -(2 * lam + 4 * mu);
  const auto q = QuadratureRule::gauss(3);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const ElementCoords X = mesh.coords_of(e);
    for (int k = 0; k < q.size(); ++k) {
      const auto& pt = q.points[k];
      const BasisEval bas = serendipity_basis(pt[0], pt[1], pt[2]);
      Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
      for (int i = 0; i < 20; ++i)
        for (int a = 0; a < 3; ++a)
          for (int c = 0; c < 3; ++c) J(a, c) += X(i, a) * bas.dN[i][c];
      const double w = q.weights[k] * J.determinant();
      for (int i = 0; i < 20; ++i) {
        const int node = mesh.connectivity[e][i];
        for (int c = 0; c < 3; ++c)
          sys.f[sys.dofs.dof(node, c)] += w * bas.N[i] * b;
      }
    }
  }

  auto field = [](double x, double y, double z) {
    return std::array<double, 3>{x * x, y * y, z * z};
  };
  const auto u = solve_with_prescribed(sys, mesh, mesh.boundary_nodes(), field);
  double umax = 0, err = 0;
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const auto& x = mesh.nodes[node];
    const auto v = field(x[0], x[1], x[2]);
    for (int c = 0; c < 3; ++c) {
      umax = std::max(umax, std::abs(v[c]));
      err = std::max(err, std::abs(u[sys.dofs.dof(node, c)] - v[c]));
    }
  }
  CHECK(err / umax < 1e-8);
}

TEST_CASE("quadrature order does not change affine element matrices") {
  const auto mesh = build_flat_laminate(small_geom(), small_spec(), 5.0,
                                        {30, -30, 0});
  const MaterialCatalog cat;
  const ElementMatrix K3 =
      mesh_element_matrix(mesh, 1, {30, -30, 0}, cat, QuadratureRule::gauss(3));
  const ElementMatrix K4 =
      mesh_element_matrix(mesh, 1, {30, -30, 0}, cat, QuadratureRule::gauss(4));
  CHECK((K3 - K4).cwiseAbs().maxCoeff() / K3.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled stiffness is symmetric and matches element scatter") {
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  const auto sys = assemble(mesh, {45, -45, 0}, MaterialCatalog{},
                            QuadratureRule::gauss(3));
  CHECK(sys.K.symmetry_error() < 1e-12);
  CHECK(sys.K.n == 3 * mesh.n_nodes());
  // Thread count must not change the matrix.
  const auto sys4 = assemble(mesh, {45, -45, 0}, MaterialCatalog{},
                             QuadratureRule::gauss(3), 4);
  REQUIRE(sys.K.val.size() == sys4.K.val.size());
  for (std::size_t i = 0; i < sys.K.val.size(); ++i)
    CHECK(sys.K.val[i] == sys4.K.val[i]);
}

TEST_CASE("periodic width identification ties opposite faces") {
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  const auto dofs = build_dofmap(mesh, true);
  CHECK(!mesh.width_pairs.empty());
  for (const auto& pr : mesh.width_pairs) {
    CHECK(dofs.dof(pr[0], 0) == dofs.dof(pr[1], 0));
    CHECK(dofs.is_slave(pr[1]));
  }
  const auto plain = build_dofmap(mesh, false);
  CHECK(dofs.n_dofs < plain.n_dofs);
}

TEST_CASE("dirichlet elimination preserves symmetry and pins the nodes") {
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  auto sys = assemble(mesh, {45, -45, 0}, MaterialCatalog{},
                      QuadratureRule::gauss(3));
  apply_dirichlet(sys, mesh.clamped_nodes, {0, 0, 0});
  CHECK(sys.K.symmetry_error() < 1e-12);
  for (int node : mesh.clamped_nodes)
    for (int c = 0; c < 3; ++c) CHECK(sys.dofs.constrained[sys.dofs.dof(node, c)]);
}

TEST_CASE("moment load is self-equilibrated with the prescribed moment") {
  CornerGeometry g = small_geom();
  MeshSpec spec = small_spec();
  spec.stiff_layer_columns = 1;
  const StackingSequence stacking{45, -45, 0};
  const auto mesh = build_mesh(g, spec, std::nullopt, stacking);
  auto sys = assemble(mesh, stacking, MaterialCatalog{},
                      QuadratureRule::gauss(3));
  const double M = 96.8;
  apply_moment_load(sys, mesh, M);
  const LoadResultants res = moment_load_resultants(sys, mesh);
  const double scale = M * g.width_W;
  CHECK(std::abs(res.net_axial_force) < 1e-8 * scale);
  CHECK(std::abs(std::abs(res.net_moment) - scale) < 1e-8 * scale);
}

TEST_CASE("moment load requires the stiff load-introduction columns") {
  const auto mesh = build_mesh(small_geom(), small_spec(), std::nullopt,
                               {45, -45, 0});
  auto sys = assemble(mesh, {45, -45, 0}, MaterialCatalog{},
                      QuadratureRule::gauss(3));
  CHECK_THROWS_AS(apply_moment_load(sys, mesh, 10.0), ConfigurationError);
  CHECK_NOTHROW(apply_moment_load(sys, mesh, 10.0, false));
}

TEST_CASE("mesh layer structure matches the stacking sequence") {
  CornerGeometry g = small_geom();
  MeshSpec spec = small_spec();
  spec.n_elems_per_ply = 2;
  const auto mesh = build_mesh(g, spec, std::nullopt, {45, -45, 0});
  // radial layers: 3 plies x2 + 2 interfaces x1
  CHECK(mesh.n_r == 3 * 2 + 2);
  int n_iface = 0;
  for (const auto& t : mesh.material)
    if (t.kind == MaterialTag::Kind::Interface) ++n_iface;
  CHECK(n_iface == 2 * mesh.n_s * mesh.n_l);
  // Jacobians all positive.
  const auto q = QuadratureRule::gauss(3);
  for (int e = 0; e < mesh.n_elems(); ++e)
    CHECK(min_jacobian_det(mesh.coords_of(e), q) > 0);
}

TEST_CASE("wrinkled mesh perturbs radii near the defect only") {
  CornerGeometry g = small_geom();
  g.width_W = 15.0;
  MeshSpec spec = small_spec();
  spec.n_elems_width = 8;
  WrinkleParams p;
  p.amplitude_d = 0.05;
  p.s_def = 0.5;
  p.l_def = 7.5;
  p.r_def = g.inner_radius_R + 0.25 * g.total_thickness();
  const auto flat = build_mesh(g, spec, std::nullopt, {45, -45, 0});
  const auto wr = build_mesh(g, spec, p, {45, -45, 0});
  REQUIRE(flat.n_nodes() == wr.n_nodes());
  // The perturbation pushes nodes outward along the radius in the mapped
  // frame; compare distances from the arc centre (L, *, 0) on the arc part.
  double max_shift = 0;
  int checked = 0;
  for (int n = 0; n < flat.n_nodes(); ++n) {
    const double s = flat.nodes_flat[n][0];
    if (s < 0.05 || s > 0.95) continue;
    auto radius = [&](const StructuredMesh& m) {
      return std::hypot(m.nodes[n][0] - g.limb_length_L, m.nodes[n][2]);
    };
    const double dr = radius(wr) - radius(flat);
    CHECK(dr >= -1e-12);
    CHECK(dr <= p.amplitude_d + 1e-12);
    max_shift = std::max(max_shift, dr);
    ++checked;
  }
  CHECK(checked > 0);
  CHECK(max_shift > 0.5 * p.amplitude_d);
}
