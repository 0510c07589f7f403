#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamfe {

/// Thrown on invalid user-facing parameters (geometry, grading, wrinkle).
struct InvalidParameter : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Corner-unfolding specimen: two straight limbs joined by a quarter-circle
/// curved section. All lengths in mm.
struct CornerGeometry {
  double width_W = 15.0;
  double limb_length_L = 3.0;
  double inner_radius_R = 6.6;
  double ply_thickness = 0.23;
  double interface_thickness = 0.02;
  int n_plies = 12;
  double resin_edge_width = 0.0;  // 0 = no edge treatment

  double total_thickness() const {
    return n_plies * ply_thickness + (n_plies - 1) * interface_thickness;
  }
  double outer_radius() const { return inner_radius_R + total_thickness(); }

  void validate() const;
  bool operator==(const CornerGeometry&) const = default;
};

/// Localised wrinkle: radial perturbation with a sech^2 envelope in each
/// direction. The arc coordinate s is normalized to [0,1] over the quarter
/// turn; the defect centre (s_def, l_def, r_def) lives in the unperturbed
/// flat frame (l and r in mm).
struct WrinkleParams {
  double amplitude_d = 0.0;  // mm
  double s_def = 0.5;
  double l_def = 0.0;  // mm, set to W/2 for a centred defect
  double r_def = 0.0;  // mm, radius of the defect centre
  double b1 = 0.2;
  double b2_minus = 0.5;  // used where r < r_def
  double b2_plus = 0.25;  // used where r > r_def
  double b3 = 0.5;

  void validate() const;
};

enum class GradeMode { TowardOneEnd, TowardBothEnds, TowardCenter };

/// Graded 1-D node coordinates on [0, length]. The element widths form a
/// geometric progression (mirrored for the symmetric modes) whose
/// largest/smallest ratio equals bias.
std::vector<double> grade_1d(int n, double length, double bias, GradeMode mode);

/// Radial wrinkle perturbation f(s,l,r), eq. of the sech^2 envelope.
/// Returns a value in [0, d].
double wrinkle_offset(double s, double l, double r, const WrinkleParams& p,
                      const CornerGeometry& geom);

/// Steepest wrinkle slope, max over s of atan(|df/ds_arc|) on the
/// (l_def, r_def) mid-plane, in degrees. The derivative is taken against
/// physical arc length at the defect radius (r_def*pi/2 mm per unit of s),
/// so the result is the fibre misalignment angle of the deformed plies.
double max_wrinkle_angle(const WrinkleParams& p, const CornerGeometry& geom);

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Amplitude d such that max_wrinkle_angle(p with d) hits target_angle
/// (degrees), by monotone bisection. Throws NoConvergence if unreachable.
double amplitude_for_angle(double target_angle_deg, const WrinkleParams& tmpl,
                           const CornerGeometry& geom);

struct OutOfDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Maps a point of the (perturbed) flat frame to the physical frame.
/// s_hat in [0,1] is the curved section; s_hat < 0 and s_hat > 1 address the
/// two limbs with an offset measured in mm (s_hat = -x covers limb points
/// (L-x, l, r); s_hat = 1 + x covers (L+r, l, -x)). r_hat in [R, R+T].
struct Vec3 {
  double x = 0, y = 0, z = 0;
};
Vec3 map_to_curved(double s_hat, double l_hat, double r_hat,
                   const CornerGeometry& geom);

}  // namespace lamfe
