#include "lamfe/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace lamfe {

DofMap build_dofmap(const StructuredMesh& mesh, bool periodic_width) {
  DofMap dm;
  dm.n_nodes = mesh.n_nodes();
  dm.master.resize(dm.n_nodes);
  for (int i = 0; i < dm.n_nodes; ++i) dm.master[i] = i;

  if (periodic_width) {
    const double W = mesh.geometry.width_W;
    for (const auto& pr : mesh.width_pairs) {
      const auto& a = mesh.nodes_flat[pr[0]];
      const auto& b = mesh.nodes_flat[pr[1]];
      if (std::abs(a[0] - b[0]) > 1e-9 * W || std::abs(a[2] - b[2]) > 1e-9 * W)
        throw PeriodicityMismatch(
            "build_dofmap: opposite width faces do not match pairwise");
      dm.master[pr[1]] = pr[0];  // master never a slave: pairs are disjoint
    }
  }

  dm.node_dof.assign(dm.n_nodes, -1);
  int count = 0;
  for (int i = 0; i < dm.n_nodes; ++i)
    if (dm.master[i] == i) {
      dm.node_dof[i] = 3 * count;
      ++count;
    }
  dm.n_dofs = 3 * count;
  dm.constrained.assign(dm.n_dofs, 0);
  dm.prescribed.assign(dm.n_dofs, 0.0);
  return dm;
}

ElementMatrix mesh_element_matrix(const StructuredMesh& mesh, int elem,
                                  const StackingSequence& stacking,
                                  const MaterialCatalog& catalog,
                                  const QuadratureRule& q) {
  const ElasticityTensor C =
      material_for_tag(mesh.material[elem], stacking, catalog);
  return element_stiffness_oriented(mesh.coords_of(elem), C.C, q);
}

namespace {

std::array<int, 60> element_dofs(const StructuredMesh& mesh, const DofMap& dm,
                                 int elem) {
  std::array<int, 60> d;
  for (int i = 0; i < 20; ++i) {
    const int n = mesh.connectivity[elem][i];
    for (int c = 0; c < 3; ++c) d[3 * i + c] = dm.dof(n, c);
  }
  return d;
}

}  // namespace

SparseSystem assemble(const StructuredMesh& mesh,
                      const StackingSequence& stacking,
                      const MaterialCatalog& catalog, const QuadratureRule& q,
                      int n_threads, bool periodic_width) {
  SparseSystem sys;
  sys.dofs = build_dofmap(mesh, periodic_width);
  const DofMap& dm = sys.dofs;
  const int ne = mesh.n_elems();

  // Representative-node adjacency -> dof sparsity pattern.
  const int n_rep = dm.n_dofs / 3;
  std::vector<std::vector<int>> adj(n_rep);
  for (int e = 0; e < ne; ++e) {
    std::array<int, 20> reps;
    for (int i = 0; i < 20; ++i)
      reps[i] = dm.node_dof[dm.master[mesh.connectivity[e][i]]] / 3;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) adj[reps[i]].push_back(reps[j]);
  }
  SparseMatrix& K = sys.K;
  K.n = dm.n_dofs;
  K.row_ptr.assign(K.n + 1, 0);
  for (int a = 0; a < n_rep; ++a) {
    auto& v = adj[a];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (int c = 0; c < 3; ++c)
      K.row_ptr[3 * a + c + 1] = static_cast<int>(v.size()) * 3;
  }
  for (int i = 0; i < K.n; ++i) K.row_ptr[i + 1] += K.row_ptr[i];
  K.col.resize(K.row_ptr[K.n]);
  K.val.assign(K.row_ptr[K.n], 0.0);
  for (int a = 0; a < n_rep; ++a)
    for (int c = 0; c < 3; ++c) {
      int out = K.row_ptr[3 * a + c];
      for (int b : adj[a])
        for (int cc = 0; cc < 3; ++cc) K.col[out++] = 3 * b + cc;
    }
  adj.clear();
  adj.shrink_to_fit();

  auto scatter = [&](int e, const ElementMatrix& Ke) {
    const auto dofs = element_dofs(mesh, dm, e);
    for (int i = 0; i < 60; ++i) {
      const int gi = dofs[i];
      const int lo = K.row_ptr[gi], hi = K.row_ptr[gi + 1];
      for (int j = 0; j < 60; ++j) {
        const int gj = dofs[j];
        auto it = std::lower_bound(K.col.begin() + lo, K.col.begin() + hi, gj);
        K.val[it - K.col.begin()] += Ke(i, j);
      }
    }
  };

  // Chunked: element matrices in parallel, scatter in fixed element order.
  const int chunk = 256;
  std::vector<ElementMatrix> buf;
  for (int e0 = 0; e0 < ne; e0 += chunk) {
    const int e1 = std::min(ne, e0 + chunk);
    buf.assign(e1 - e0, ElementMatrix());
    auto work = [&](int t, int nt) {
      for (int e = e0 + t; e < e1; e += nt)
        buf[e - e0] = mesh_element_matrix(mesh, e, stacking, catalog, q);
    };
    if (n_threads <= 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> ts;
      for (int t = 0; t < n_threads; ++t) ts.emplace_back(work, t, n_threads);
      for (auto& t : ts) t.join();
    }
    for (int e = e0; e < e1; ++e) scatter(e, buf[e - e0]);
  }
  sys.f.assign(dm.n_dofs, 0.0);
  return sys;
}

void apply_dirichlet(SparseSystem& sys, const std::vector<int>& nodes,
                     const std::array<double, 3>& value) {
  DofMap& dm = sys.dofs;
  std::vector<int> newly;
  for (int n : nodes)
    for (int c = 0; c < 3; ++c) {
      const int d = dm.dof(n, c);
      if (dm.constrained[d]) {
        if (dm.prescribed[d] != value[c])
          throw ConstraintConflict(
              "apply_dirichlet: conflicting prescription on dof " +
              std::to_string(d));
        continue;
      }
      dm.constrained[d] = 1;
      dm.prescribed[d] = value[c];
      newly.push_back(d);
    }
  std::sort(newly.begin(), newly.end());
  if (newly.empty()) return;
  std::vector<char> is_new(dm.n_dofs, 0);
  for (int d : newly) is_new[d] = 1;

  SparseMatrix& K = sys.K;
  // Right-hand-side correction and column elimination on free rows, then
  // unit rows on constrained dofs.
  for (int i = 0; i < K.n; ++i) {
    const bool row_constrained = dm.constrained[i];
    for (int k = K.row_ptr[i]; k < K.row_ptr[i + 1]; ++k) {
      const int j = K.col[k];
      if (row_constrained) {
        K.val[k] = (j == i) ? 1.0 : 0.0;
      } else if (is_new[j]) {
        sys.f[i] -= K.val[k] * dm.prescribed[j];
        K.val[k] = 0.0;
      }
    }
    if (row_constrained) sys.f[i] = dm.prescribed[i];
  }
}

namespace {

struct FaceFrame {
  Eigen::Vector3d normal;  // outward at the loaded end
};

FaceFrame face_frame(const StructuredMesh& mesh, int elem) {
  const ElementCoords coords = mesh.coords_of(elem);
  const auto be = serendipity_basis(1.0, 0.0, 0.0);
  Eigen::Matrix<double, 20, 3> dN;
  Eigen::Vector3d center_face = Eigen::Vector3d::Zero();
  for (int i = 0; i < 20; ++i) {
    for (int d = 0; d < 3; ++d) dN(i, d) = be.dN[i][d];
    center_face += be.N[i] * coords.row(i).transpose();
  }
  const Eigen::Matrix3d J = coords.transpose() * dN;
  Eigen::Vector3d n = J.col(1).cross(J.col(2)).normalized();
  const auto bec = serendipity_basis(0.0, 0.0, 0.0);
  Eigen::Vector3d center_elem = Eigen::Vector3d::Zero();
  for (int i = 0; i < 20; ++i) center_elem += bec.N[i] * coords.row(i).transpose();
  if (n.dot(center_face - center_elem) < 0) n = -n;
  return {n};
}

}  // namespace

void apply_moment_load(SparseSystem& sys, const StructuredMesh& mesh,
                       double M_per_width, bool require_stiff_layer) {
  if (mesh.loaded_face_elems.empty())
    throw ConfigurationError("apply_moment_load: mesh has no loaded end");
  if (require_stiff_layer) {
    for (int e : mesh.loaded_face_elems)
      if (mesh.material[e].kind != MaterialTag::Kind::StiffLayer)
        throw ConfigurationError(
            "apply_moment_load: loaded end is not tagged as stiff layer "
            "(set stiff_layer_columns >= 1 or disable the check)");
  }
  if (M_per_width == 0) return;

  const CornerGeometry& g = mesh.geometry;
  const double T = g.total_thickness();
  const double r_mid = g.inner_radius_R + 0.5 * T;
  // Positive moment opens (unfolds) the corner: tensile axial traction at
  // the inner radius, which puts the curved section into through-thickness
  // tension.
  const double c = -12.0 * M_per_width / (T * T * T);

  // 3x3 Gauss on the face (exact for the quadratic basis times the linear
  // traction on the straight limb end).
  static const double gp[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  for (int e : mesh.loaded_face_elems) {
    const ElementCoords coords = mesh.coords_of(e);
    const FaceFrame fr = face_frame(mesh, e);
    std::array<double, 20> r_flat;
    for (int i = 0; i < 20; ++i)
      r_flat[i] = mesh.nodes_flat[mesh.connectivity[e][i]][2];

    for (int pz = 0; pz < 3; ++pz)
      for (int py = 0; py < 3; ++py) {
        const double eta = gp[py];
        const double zeta = gp[pz];
        const double w = gw[py] * gw[pz];
        const auto be = serendipity_basis(1.0, eta, zeta);
        Eigen::Matrix<double, 20, 3> dN;
        for (int i = 0; i < 20; ++i)
          for (int d = 0; d < 3; ++d) dN(i, d) = be.dN[i][d];
        const Eigen::Matrix3d J = coords.transpose() * dN;
        const double dA = J.col(1).cross(J.col(2)).norm();
        double r = 0;
        for (int i = 0; i < 20; ++i) r += be.N[i] * r_flat[i];
        const Eigen::Vector3d t = c * (r - r_mid) * fr.normal;
        for (int i = 0; i < 20; ++i) {
          const int n = mesh.connectivity[e][i];
          for (int d = 0; d < 3; ++d)
            sys.f[sys.dofs.dof(n, d)] += w * be.N[i] * t(d) * dA;
        }
      }
  }
}

LoadResultants moment_load_resultants(const SparseSystem& sys,
                                      const StructuredMesh& mesh) {
  LoadResultants res;
  const FaceFrame fr = face_frame(mesh, mesh.loaded_face_elems.front());
  const CornerGeometry& g = mesh.geometry;
  const double r_mid = g.inner_radius_R + 0.5 * g.total_thickness();
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (sys.dofs.is_slave(n)) continue;
    const int d0 = sys.dofs.dof(n, 0);
    const Eigen::Vector3d f(sys.f[d0], sys.f[d0 + 1], sys.f[d0 + 2]);
    const double fa = f.dot(fr.normal);
    res.net_axial_force += fa;
    res.net_moment += fa * (mesh.nodes_flat[n][2] - r_mid);
  }
  return res;
}

}  // namespace lamfe
