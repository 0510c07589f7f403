#pragma once

#include <array>
#include <string>
#include <vector>

#include "lamfe/assembly.hpp"

namespace lamfe {

/// Six stress components in the laminate frame, Voigt order:
/// (sigma_s, sigma_l, sigma_r, tau_rl, tau_rs, tau_sl). MPa.
using Stress6 = std::array<double, 6>;

/// Quadrature-point stresses plus nodal values recovered by least-squares
/// extrapolation. Nodal averaging stays within one material region, so a
/// node on a ply/interface boundary carries one value per region.
struct StressField {
  int nqp = 0;  // points per element
  std::vector<Stress6> qp_stress;               // element-major
  std::vector<std::array<double, 3>> qp_flat;   // (s, l, r)
  std::vector<std::array<double, 3>> qp_mapped;

  struct NodalEntry {
    int material_code;
    Stress6 stress;
  };
  std::vector<std::vector<NodalEntry>> nodal;  // per node

  const Stress6* nodal_stress(int node, int material_code) const;
};

StressField recover_stress(const std::vector<double>& u,
                           const StructuredMesh& mesh, const DofMap& dofs,
                           const StackingSequence& stacking,
                           const MaterialCatalog& catalog,
                           const QuadratureRule& q);

struct FailureAllowables {
  double s33 = 61.0;  // interlaminar tensile strength, MPa
  double s13 = 97.0;  // interlaminar shear strength, MPa

  bool operator==(const FailureAllowables&) const = default;
};

/// Quadratic damage-onset criterion; compressive sigma_r is ignored.
double camanho_criterion(double sigma_r, double tau_rs, double tau_rl,
                         const FailureAllowables& a);

struct FailureResult {
  std::vector<double> F;  // per qp, element-major; zero off the interfaces
  double F_max = 0;
  int elem = -1;
  int qp = -1;
  int interface_from_outer = 0;  // 1-based, as reported in failure tables
  double arc_pos_deg = 0;        // from the apex
  double width_pos_mm = 0;
  double r_mm = 0;
  Stress6 peak_stress{};
  double M_applied = 0;
  double M_fail = 0;  // infinity when F_max = 0
};

/// Evaluates F at interface quadrature points only and scales the applied
/// moment to the onset moment. Ties in the maximum break toward the lowest
/// element index.
FailureResult evaluate_failure(const StressField& field,
                               const StructuredMesh& mesh,
                               const FailureAllowables& allowables,
                               double M_applied);

struct ProfileRecord {
  double r;
  Stress6 stress;
  double F;
  int material_code;
};

/// Through-thickness profile at the element column nearest to the given arc
/// position (degrees from the corner apex, positive toward the loaded limb)
/// and width position. Ordered from the outer radius inward.
std::vector<ProfileRecord> extract_line(const StressField& field,
                                        const StructuredMesh& mesh,
                                        const FailureAllowables& allowables,
                                        double arc_deg, double width_mm);

void write_profile_csv(const std::string& path,
                       const std::vector<ProfileRecord>& profile);

/// One-row failure summary (header + row).
void write_failure_csv(const std::string& path, const FailureResult& result,
                       double defect_angle_deg, double max_displacement);

/// Legacy VTK export with cell-averaged stress and F fields.
void write_vtk_stress(const StructuredMesh& mesh, const StressField& field,
                      const FailureResult& failure, const std::string& path);

}  // namespace lamfe
