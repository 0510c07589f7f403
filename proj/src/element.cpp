#include "lamfe/element.hpp"

#include <cmath>
#include <limits>

namespace lamfe {

const std::array<std::array<double, 3>, 20> kSerendipityNodes = {{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},  // bottom corners
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},   // top corners
    {0, -1, -1},  {1, 0, -1},  {0, 1, -1}, {-1, 0, -1},  // bottom edges
    {0, -1, 1},   {1, 0, 1},   {0, 1, 1},  {-1, 0, 1},   // top edges
    {-1, -1, 0},  {1, -1, 0},  {1, 1, 0},  {-1, 1, 0},   // vertical edges
}};

BasisEval serendipity_basis(double xi, double eta, double zeta) {
  BasisEval out;
  const double c[3] = {xi, eta, zeta};
  for (int i = 0; i < 20; ++i) {
    const auto& n = kSerendipityNodes[i];
    if (i < 8) {
      const double a = 1 + xi * n[0], b = 1 + eta * n[1], d = 1 + zeta * n[2];
      const double s = xi * n[0] + eta * n[1] + zeta * n[2] - 2;
      out.N[i] = 0.125 * a * b * d * s;
      out.dN[i][0] = 0.125 * n[0] * b * d * (s + a);
      out.dN[i][1] = 0.125 * n[1] * a * d * (s + b);
      out.dN[i][2] = 0.125 * n[2] * a * b * (s + d);
    } else {
      // exactly one zero local coordinate on midside nodes
      int z = 0;
      while (n[z] != 0) ++z;
      const int p = (z + 1) % 3, q = (z + 2) % 3;
      const double a = 1 - c[z] * c[z];
      const double b = 1 + c[p] * n[p], d = 1 + c[q] * n[q];
      out.N[i] = 0.25 * a * b * d;
      out.dN[i][z] = -0.5 * c[z] * b * d;
      out.dN[i][p] = 0.25 * a * n[p] * d;
      out.dN[i][q] = 0.25 * a * b * n[q];
    }
  }
  return out;
}

QuadratureRule QuadratureRule::gauss(int npd) {
  static const std::vector<std::vector<double>> abscissa = {
      {},
      {0.0},
      {-0.5773502691896257645091488, 0.5773502691896257645091488},
      {-0.7745966692414833770358531, 0.0, 0.7745966692414833770358531},
      {-0.8611363115940525752239465, -0.3399810435848562648026658,
       0.3399810435848562648026658, 0.8611363115940525752239465},
      {-0.9061798459386639927976269, -0.5384693101056830910363144, 0.0,
       0.5384693101056830910363144, 0.9061798459386639927976269}};
  static const std::vector<std::vector<double>> weight = {
      {},
      {2.0},
      {1.0, 1.0},
      {0.5555555555555555555555556, 0.8888888888888888888888889,
       0.5555555555555555555555556},
      {0.3478548451374538573730639, 0.6521451548625461426269361,
       0.6521451548625461426269361, 0.3478548451374538573730639},
      {0.2369268850561890875142640, 0.4786286704993664680412915,
       0.5688888888888888888888889, 0.4786286704993664680412915,
       0.2369268850561890875142640}};
  if (npd < 1 || npd > 5)
    throw std::invalid_argument("QuadratureRule::gauss: 1..5 points per direction");
  QuadratureRule r;
  for (int k = 0; k < npd; ++k)
    for (int j = 0; j < npd; ++j)
      for (int i = 0; i < npd; ++i) {
        r.points.push_back({abscissa[npd][i], abscissa[npd][j], abscissa[npd][k]});
        r.weights.push_back(weight[npd][i] * weight[npd][j] * weight[npd][k]);
      }
  return r;
}

Eigen::Matrix3d local_triad(const Eigen::Matrix3d& J) {
  // J columns are d x / d(xi, eta, zeta); reference axes follow (s, l, r).
  Eigen::Vector3d es = J.col(0).normalized();
  Eigen::Vector3d er = J.col(2) - J.col(2).dot(es) * es;
  er.normalize();
  const Eigen::Vector3d el = er.cross(es);
  Eigen::Matrix3d Q;
  Q.col(0) = es;
  Q.col(1) = el;
  Q.col(2) = er;
  return Q;
}

namespace {

struct QpGeometry {
  Eigen::Matrix3d J;
  double detJ;
  Eigen::Matrix<double, 20, 3> grad;  // shape gradients w.r.t. x
};

QpGeometry qp_geometry(const ElementCoords& coords, const BasisEval& be) {
  QpGeometry g;
  Eigen::Matrix<double, 20, 3> dN;
  for (int i = 0; i < 20; ++i)
    for (int d = 0; d < 3; ++d) dN(i, d) = be.dN[i][d];
  g.J = coords.transpose() * dN;  // J(a,b) = d x_a / d xi_b
  g.detJ = g.J.determinant();
  if (g.detJ > 0) g.grad = dN * g.J.inverse();
  return g;
}

void add_btcb(ElementMatrix& Ke, const QpGeometry& g, const Matrix6& C,
              double w) {
  Eigen::Matrix<double, 6, 60> B = Eigen::Matrix<double, 6, 60>::Zero();
  for (int i = 0; i < 20; ++i) {
    const double gx = g.grad(i, 0), gy = g.grad(i, 1), gz = g.grad(i, 2);
    const int c = 3 * i;
    B(0, c) = gx;
    B(1, c + 1) = gy;
    B(2, c + 2) = gz;
    B(3, c + 1) = gz;  // gamma_23
    B(3, c + 2) = gy;
    B(4, c) = gz;  // gamma_13
    B(4, c + 2) = gx;
    B(5, c) = gy;  // gamma_12
    B(5, c + 1) = gx;
  }
  Ke.noalias() += (w * g.detJ) * (B.transpose() * C * B);
}

}  // namespace

ElementMatrix element_stiffness(const ElementCoords& coords, const Matrix6& C,
                                const QuadratureRule& q) {
  ElementMatrix Ke = ElementMatrix::Zero();
  for (int p = 0; p < q.size(); ++p) {
    const auto be =
        serendipity_basis(q.points[p][0], q.points[p][1], q.points[p][2]);
    const QpGeometry g = qp_geometry(coords, be);
    if (g.detJ <= 0)
      throw ElementInversion("element_stiffness: non-positive Jacobian");
    add_btcb(Ke, g, C, q.weights[p]);
  }
  Ke = 0.5 * (Ke + Ke.transpose().eval());
  return Ke;
}

ElementMatrix element_stiffness_oriented(const ElementCoords& coords,
                                         const Matrix6& C_local,
                                         const QuadratureRule& q) {
  ElementMatrix Ke = ElementMatrix::Zero();
  for (int p = 0; p < q.size(); ++p) {
    const auto be =
        serendipity_basis(q.points[p][0], q.points[p][1], q.points[p][2]);
    const QpGeometry g = qp_geometry(coords, be);
    if (g.detJ <= 0)
      throw ElementInversion("element_stiffness_oriented: non-positive Jacobian");
    const Matrix6 C = rotate_stiffness_general(C_local, local_triad(g.J));
    add_btcb(Ke, g, C, q.weights[p]);
  }
  Ke = 0.5 * (Ke + Ke.transpose().eval());
  return Ke;
}

double min_jacobian_det(const ElementCoords& coords, const QuadratureRule& q) {
  double m = std::numeric_limits<double>::max();
  for (int p = 0; p < q.size(); ++p) {
    const auto be =
        serendipity_basis(q.points[p][0], q.points[p][1], q.points[p][2]);
    Eigen::Matrix<double, 20, 3> dN;
    for (int i = 0; i < 20; ++i)
      for (int d = 0; d < 3; ++d) dN(i, d) = be.dN[i][d];
    m = std::min(m, (coords.transpose() * dN).determinant());
  }
  return m;
}

}  // namespace lamfe
