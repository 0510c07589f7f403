#include "lamfe/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lamfe {

namespace {

double sech(double x) { return 1.0 / std::cosh(x); }
double sech2(double x) {
  const double s = sech(x);
  return s * s;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void CornerGeometry::validate() const {
  if (width_W <= 0 || limb_length_L <= 0 || inner_radius_R <= 0 ||
      ply_thickness <= 0 || n_plies < 1)
    throw InvalidParameter("CornerGeometry: all lengths must be positive");
  if (interface_thickness < 0)
    throw InvalidParameter("CornerGeometry: negative interface thickness");
  if (resin_edge_width < 0 || resin_edge_width >= width_W / 2)
    throw InvalidParameter("CornerGeometry: resin_edge_width must be in [0, W/2)");
}

void WrinkleParams::validate() const {
  if (amplitude_d < 0) throw InvalidParameter("WrinkleParams: amplitude < 0");
  if (b1 <= 0 || b2_minus <= 0 || b2_plus <= 0 || b3 <= 0)
    throw InvalidParameter("WrinkleParams: extent parameters must be positive");
}

std::vector<double> grade_1d(int n, double length, double bias, GradeMode mode) {
  if (n < 1) throw InvalidParameter("grade_1d: n must be >= 1");
  if (length <= 0) throw InvalidParameter("grade_1d: length must be positive");
  if (bias < 1) throw InvalidParameter("grade_1d: bias must be >= 1");

  // Per-element exponent of the geometric progression. TowardOneEnd puts the
  // smallest element at 0; the symmetric modes mirror about the midpoint.
  std::vector<double> w(n);
  if (mode == GradeMode::TowardOneEnd) {
    const double q = (n > 1) ? std::pow(bias, 1.0 / (n - 1)) : 1.0;
    double v = 1.0;
    for (int i = 0; i < n; ++i, v *= q) w[i] = v;
  } else {
    const int max_exp = (n - 1) / 2;
    const double q = (max_exp >= 1) ? std::pow(bias, 1.0 / max_exp) : 1.0;
    for (int i = 0; i < n; ++i) {
      const int e = std::min(i, n - 1 - i);
      const int ee = (mode == GradeMode::TowardBothEnds) ? e : max_exp - e;
      w[i] = std::pow(q, ee);
    }
  }
  double sum = 0;
  for (double wi : w) sum += wi;
  std::vector<double> nodes(n + 1);
  nodes[0] = 0.0;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += w[i];
    nodes[i + 1] = length * (acc / sum);
  }
  nodes[n] = length;  // exact endpoint
  return nodes;
}

double wrinkle_offset(double s, double l, double r, const WrinkleParams& p,
                      const CornerGeometry& geom) {
  if (p.amplitude_d == 0) return 0.0;
  const double b2 = (r < p.r_def) ? p.b2_minus : p.b2_plus;
  const double R = geom.inner_radius_R;
  const double W = geom.width_W;
  return p.amplitude_d * sech2((s - p.s_def) / p.b1) *
         sech2(kPi * (r - p.r_def) / (R * b2)) *
         sech2(kPi * (l - p.l_def) / (W * p.b3));
}

double max_wrinkle_angle(const WrinkleParams& p, const CornerGeometry& geom) {
  (void)geom;
  if (p.amplitude_d == 0) return 0.0;
  if (p.r_def <= 0)
    throw InvalidParameter("max_wrinkle_angle: r_def must be a radius in mm");
  // On the (l_def, r_def) plane f(s) = d sech^2(t) with t = (s-s_def)/b1, so
  // df/ds = -(2 d / b1) tanh(t) sech^2(t). The factor tanh*sech^2 attains its
  // maximum 2/(3 sqrt(3)) at tanh^2(t) = 1/3. The slope is reported against
  // physical arc length on the defect mid-surface: one unit of s spans a
  // quarter circle of radius r_def, i.e. r_def*pi/2 millimetres, so the
  // misalignment angle is the one a micrograph of the part would show.
  const double peak = 2.0 / (3.0 * std::sqrt(3.0));
  const double arc = p.r_def * 0.5 * kPi;
  const double slope = 2.0 * p.amplitude_d / p.b1 * peak / arc;
  return std::atan(slope) * 180.0 / kPi;
}

double amplitude_for_angle(double target_angle_deg, const WrinkleParams& tmpl,
                           const CornerGeometry& geom) {
  if (target_angle_deg == 0) return 0.0;
  if (target_angle_deg < 0 || target_angle_deg >= 90)
    throw InvalidParameter("amplitude_for_angle: target angle must be in [0, 90)");
  WrinkleParams p = tmpl;
  const double tol = 0.05 / 10;  // degrees; comfortably inside the contract
  double lo = 0.0, hi = 1.0;
  auto angle_of = [&](double d) {
    p.amplitude_d = d;
    return max_wrinkle_angle(p, geom);
  };
  int expand = 0;
  while (angle_of(hi) < target_angle_deg) {
    hi *= 2;
    if (++expand > 60)
      throw NoConvergence("amplitude_for_angle: target angle unreachable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = angle_of(mid);
    if (std::abs(a - target_angle_deg) < tol) return mid;
    (a < target_angle_deg ? lo : hi) = mid;
  }
  throw NoConvergence("amplitude_for_angle: bisection did not converge");
}

Vec3 map_to_curved(double s_hat, double l_hat, double r_hat,
                   const CornerGeometry& geom) {
  const double R = geom.inner_radius_R;
  const double T = geom.total_thickness();
  const double L = geom.limb_length_L;
  // The wrinkle may push r_hat slightly past the nominal layer band; only
  // gross misuse is rejected.
  if (r_hat < R - T || r_hat > R + 2 * T)
    throw OutOfDomain("map_to_curved: r_hat outside the laminate band");
  if (s_hat < -geom.limb_length_L - 1e-12 || s_hat > 1 + geom.limb_length_L + 1e-12)
    throw OutOfDomain("map_to_curved: s_hat outside the parametric block");

  if (s_hat < 0) return {L + s_hat, l_hat, r_hat};  // limb tangent at s=0
  if (s_hat > 1) return {L + r_hat, l_hat, -(s_hat - 1)};  // limb at s=1
  const double a = 0.5 * kPi * s_hat;
  return {L + r_hat * std::sin(a), l_hat, r_hat * std::cos(a)};
}

}  // namespace lamfe
