#include "lamfe/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lamfe/geometry.hpp"

namespace lamfe {

namespace {

Eigen::Matrix3d voigt_to_tensor(const Eigen::Matrix<double, 6, 1>& s) {
  Eigen::Matrix3d T;
  T << s(0), s(5), s(4), s(5), s(1), s(3), s(4), s(3), s(2);
  return T;
}

Stress6 tensor_to_voigt(const Eigen::Matrix3d& T) {
  return {T(0, 0), T(1, 1), T(2, 2), T(1, 2), T(0, 2), T(0, 1)};
}

double trilinear(const std::array<double, 3>& x, int mono) {
  switch (mono) {
    case 0: return 1.0;
    case 1: return x[0];
    case 2: return x[1];
    case 3: return x[2];
    case 4: return x[0] * x[1];
    case 5: return x[1] * x[2];
    case 6: return x[0] * x[2];
    default: return x[0] * x[1] * x[2];
  }
}

// 20 x nqp extrapolation operator: least-squares trilinear fit through the
// quadrature points, evaluated at the element nodes.
Eigen::MatrixXd extrapolation_matrix(const QuadratureRule& q) {
  const int nqp = q.size();
  Eigen::MatrixXd P(nqp, 8);
  for (int p = 0; p < nqp; ++p)
    for (int m = 0; m < 8; ++m) P(p, m) = trilinear(q.points[p], m);
  Eigen::MatrixXd Pn(20, 8);
  for (int i = 0; i < 20; ++i)
    for (int m = 0; m < 8; ++m) Pn(i, m) = trilinear(kSerendipityNodes[i], m);
  return Pn * (P.transpose() * P).ldlt().solve(P.transpose());
}

}  // namespace

const Stress6* StressField::nodal_stress(int node, int material_code) const {
  for (const auto& e : nodal[node])
    if (e.material_code == material_code) return &e.stress;
  return nullptr;
}

StressField recover_stress(const std::vector<double>& u,
                           const StructuredMesh& mesh, const DofMap& dofs,
                           const StackingSequence& stacking,
                           const MaterialCatalog& catalog,
                           const QuadratureRule& q) {
  StressField field;
  const int ne = mesh.n_elems();
  const int nqp = q.size();
  field.nqp = nqp;
  field.qp_stress.resize(std::size_t(ne) * nqp);
  field.qp_flat.resize(std::size_t(ne) * nqp);
  field.qp_mapped.resize(std::size_t(ne) * nqp);
  field.nodal.resize(mesh.n_nodes());

  const Eigen::MatrixXd E = extrapolation_matrix(q);

  struct Accum {
    int code;
    int count = 0;
    Stress6 sum{};
  };
  std::vector<std::vector<Accum>> acc(mesh.n_nodes());

  Eigen::Matrix<double, 20, 3> coords, flat;
  Eigen::Matrix<double, 20, 3> dN;
  Eigen::Matrix<double, Eigen::Dynamic, 6> qp_local(nqp, 6);

  for (int e = 0; e < ne; ++e) {
    coords = mesh.coords_of(e);
    Eigen::Matrix<double, 60, 1> ue;
    for (int i = 0; i < 20; ++i) {
      const int n = mesh.connectivity[e][i];
      for (int c = 0; c < 3; ++c) {
        flat(i, c) = mesh.nodes_flat[n][c];
        ue(3 * i + c) = u[dofs.dof(n, c)];
      }
    }
    const Matrix6 C_local =
        material_for_tag(mesh.material[e], stacking, catalog).C;

    for (int p = 0; p < nqp; ++p) {
      const auto& xi = q.points[p];
      const BasisEval be = serendipity_basis(xi[0], xi[1], xi[2]);
      for (int i = 0; i < 20; ++i)
        for (int c = 0; c < 3; ++c) dN(i, c) = be.dN[i][c];
      const Eigen::Matrix3d J = coords.transpose() * dN;
      const Eigen::Matrix<double, 20, 3> dNg = dN * J.inverse();

      Eigen::Matrix<double, 6, 1> eps = Eigen::Matrix<double, 6, 1>::Zero();
      for (int i = 0; i < 20; ++i) {
        const double ux = ue(3 * i), uy = ue(3 * i + 1), uz = ue(3 * i + 2);
        eps(0) += dNg(i, 0) * ux;
        eps(1) += dNg(i, 1) * uy;
        eps(2) += dNg(i, 2) * uz;
        eps(3) += dNg(i, 2) * uy + dNg(i, 1) * uz;
        eps(4) += dNg(i, 2) * ux + dNg(i, 0) * uz;
        eps(5) += dNg(i, 1) * ux + dNg(i, 0) * uy;
      }
      const Eigen::Matrix3d Q = local_triad(J);
      const Matrix6 C = rotate_stiffness_general(C_local, Q);
      const Eigen::Matrix<double, 6, 1> sg = C * eps;
      const Eigen::Matrix3d S = Q.transpose() * voigt_to_tensor(sg) * Q;
      const Stress6 sl = tensor_to_voigt(S);

      const std::size_t idx = std::size_t(e) * nqp + p;
      field.qp_stress[idx] = sl;
      for (int c = 0; c < 3; ++c) {
        double xm = 0, xf = 0;
        for (int i = 0; i < 20; ++i) {
          xm += be.N[i] * coords(i, c);
          xf += be.N[i] * flat(i, c);
        }
        field.qp_mapped[idx][c] = xm;
        field.qp_flat[idx][c] = xf;
      }
      for (int c = 0; c < 6; ++c) qp_local(p, c) = sl[c];
    }

    const Eigen::MatrixXd nodal = E * qp_local;  // 20 x 6
    const int code = mesh.material[e].code();
    for (int i = 0; i < 20; ++i) {
      const int n = mesh.connectivity[e][i];
      Accum* slot = nullptr;
      for (auto& a : acc[n])
        if (a.code == code) slot = &a;
      if (!slot) {
        acc[n].push_back({code});
        slot = &acc[n].back();
      }
      ++slot->count;
      for (int c = 0; c < 6; ++c) slot->sum[c] += nodal(i, c);
    }
  }

  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (const auto& a : acc[n]) {
      StressField::NodalEntry entry{a.code, {}};
      for (int c = 0; c < 6; ++c) entry.stress[c] = a.sum[c] / a.count;
      field.nodal[n].push_back(entry);
    }
  return field;
}

double camanho_criterion(double sigma_r, double tau_rs, double tau_rl,
                         const FailureAllowables& a) {
  const double t = std::max(sigma_r, 0.0) / a.s33;
  const double u = tau_rs / a.s13;
  const double v = tau_rl / a.s13;
  return std::sqrt(t * t + u * u + v * v);
}

namespace {

// Arc parameter s in [0,1] covers the quarter circle; the apex sits at 0.5.
double arc_deg_of(double s_flat) { return (s_flat - 0.5) * 90.0; }

}  // namespace

FailureResult evaluate_failure(const StressField& field,
                               const StructuredMesh& mesh,
                               const FailureAllowables& allowables,
                               double M_applied) {
  FailureResult res;
  res.M_applied = M_applied;
  res.F.assign(field.qp_stress.size(), 0.0);
  bool any_interface = false;
  const int nqp = field.nqp;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (mesh.material[e].kind != MaterialTag::Kind::Interface) continue;
    any_interface = true;
    for (int p = 0; p < nqp; ++p) {
      const std::size_t idx = std::size_t(e) * nqp + p;
      const Stress6& s = field.qp_stress[idx];
      const double F = camanho_criterion(s[2], s[4], s[3], allowables);
      res.F[idx] = F;
      if (F > res.F_max) {
        res.F_max = F;
        res.elem = e;
        res.qp = p;
      }
    }
  }
  if (!any_interface)
    throw ConfigurationError("evaluate_failure: mesh has no interface layers");

  if (res.elem >= 0) {
    const std::size_t idx = std::size_t(res.elem) * nqp + res.qp;
    res.peak_stress = field.qp_stress[idx];
    const auto& xf = field.qp_flat[idx];
    res.arc_pos_deg = arc_deg_of(xf[0]);
    res.width_pos_mm = xf[1];
    res.r_mm = xf[2];
    const int n_interfaces =
        static_cast<int>(mesh.geometry.n_plies) - 1;
    res.interface_from_outer = n_interfaces - mesh.material[res.elem].index;
  }
  res.M_fail = res.F_max > 0 ? M_applied / res.F_max
                             : std::numeric_limits<double>::infinity();
  return res;
}

std::vector<ProfileRecord> extract_line(const StressField& field,
                                        const StructuredMesh& mesh,
                                        const FailureAllowables& allowables,
                                        double arc_deg, double width_mm) {
  if (arc_deg < -45.0 || arc_deg > 45.0)
    throw OutOfDomain("extract_line: arc position outside the curved section");
  if (width_mm < 0.0 || width_mm > mesh.geometry.width_W)
    throw OutOfDomain("extract_line: width position outside the part");
  const double s_target = 0.5 + arc_deg / 90.0;

  // Nearest element column by flat centre.
  int best_is = -1, best_il = -1;
  double ds_best = 0, dl_best = 0;
  for (int is = 0; is < mesh.n_s; ++is) {
    const double ds =
        std::abs(mesh.elem_center[mesh.elem_id(is, 0, 0)][0] - s_target);
    if (best_is < 0 || ds < ds_best) {
      best_is = is;
      ds_best = ds;
    }
  }
  for (int il = 0; il < mesh.n_l; ++il) {
    const double dl =
        std::abs(mesh.elem_center[mesh.elem_id(0, il, 0)][1] - width_mm);
    if (best_il < 0 || dl < dl_best) {
      best_il = il;
      dl_best = dl;
    }
  }

  std::vector<ProfileRecord> out;
  const int nqp = field.nqp;
  for (int ir = mesh.n_r - 1; ir >= 0; --ir) {
    const int e = mesh.elem_id(best_is, best_il, ir);
    ProfileRecord rec{};
    for (int p = 0; p < nqp; ++p) {
      const std::size_t idx = std::size_t(e) * nqp + p;
      for (int c = 0; c < 6; ++c) rec.stress[c] += field.qp_stress[idx][c];
    }
    for (int c = 0; c < 6; ++c) rec.stress[c] /= nqp;
    rec.r = mesh.elem_center[e][2];
    rec.F = camanho_criterion(rec.stress[2], rec.stress[4], rec.stress[3],
                              allowables);
    rec.material_code = mesh.material[e].code();
    out.push_back(rec);
  }
  return out;
}

void write_profile_csv(const std::string& path,
                       const std::vector<ProfileRecord>& profile) {
  std::ofstream f(path);
  f << "r_mm,sigma_s,sigma_l,sigma_r,tau_sl,tau_rs,tau_rl,F,material_tag\n";
  char buf[256];
  for (const auto& r : profile) {
    std::snprintf(buf, sizeof buf,
                  "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", r.r,
                  r.stress[0], r.stress[1], r.stress[2], r.stress[5],
                  r.stress[4], r.stress[3], r.F, r.material_code);
    f << buf;
  }
}

void write_failure_csv(const std::string& path, const FailureResult& result,
                       double defect_angle_deg, double max_displacement) {
  std::ofstream f(path);
  f << "defect_slope_deg,max_displacement_mm,arc_pos_deg,width_pos_mm,r_mm,"
       "interface_from_outer,F_max,sigma_s,sigma_l,sigma_r,tau_sl,tau_rs,"
       "tau_rl,M_applied,M_fail\n";
  char buf[512];
  const auto& s = result.peak_stress;
  std::snprintf(buf, sizeof buf,
                "%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,"
                "%.10g,%.10g,%.10g,%.10g,%.10g\n",
                defect_angle_deg, max_displacement, result.arc_pos_deg,
                result.width_pos_mm, result.r_mm, result.interface_from_outer,
                result.F_max, s[0], s[1], s[2], s[5], s[4], s[3],
                result.M_applied, result.M_fail);
  f << buf;
}

void write_vtk_stress(const StructuredMesh& mesh, const StressField& field,
                      const FailureResult& failure, const std::string& path) {
  std::ofstream f(path);
  f << "# vtk DataFile Version 3.0\nstress field\nASCII\n"
       "DATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes)
    f << p[0] << " " << p[1] << " " << p[2] << "\n";
  const int ne = mesh.n_elems();
  f << "CELLS " << ne << " " << 9 * ne << "\n";
  for (const auto& c : mesh.connectivity) {
    f << 8;
    for (int i = 0; i < 8; ++i) f << " " << c[i];
    f << "\n";
  }
  f << "CELL_TYPES " << ne << "\n";
  for (int e = 0; e < ne; ++e) f << 12 << "\n";

  const int nqp = field.nqp;
  static const char* names[6] = {"sigma_s", "sigma_l", "sigma_r",
                                 "tau_rl",  "tau_rs",  "tau_sl"};
  f << "CELL_DATA " << ne << "\n";
  for (int c = 0; c < 6; ++c) {
    f << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < ne; ++e) {
      double s = 0;
      for (int p = 0; p < nqp; ++p)
        s += field.qp_stress[std::size_t(e) * nqp + p][c];
      f << s / nqp << "\n";
    }
  }
  f << "SCALARS F double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < ne; ++e) {
    double m = 0;
    for (int p = 0; p < nqp; ++p)
      m = std::max(m, failure.F[std::size_t(e) * nqp + p]);
    f << m << "\n";
  }
}

}  // namespace lamfe
