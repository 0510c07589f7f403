#include "lamfe/sparse.hpp"

#include <Eigen/Sparse>
#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace lamfe {

double SparseMatrix::symmetry_error() const {
  // Build a transpose-lookup by walking both triangles.
  double max_abs = 0, max_diff = 0;
  for (double v : val) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0) return 0;
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int j = col[k];
      // binary search row j for column i
      const int lo = row_ptr[j], hi = row_ptr[j + 1];
      auto it = std::lower_bound(col.begin() + lo, col.begin() + hi, i);
      const double vt =
          (it != col.begin() + hi && *it == i) ? val[it - col.begin()] : 0.0;
      max_diff = std::max(max_diff, std::abs(val[k] - vt));
    }
  return max_diff / max_abs;
}

SparseMatrix SparseMatrix::from_triplets(
    int n, const std::vector<std::array<int, 2>>& ij,
    const std::vector<double>& v) {
  SparseMatrix A;
  A.n = n;
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (std::size_t k = 0; k < ij.size(); ++k)
    rows[ij[k][0]].emplace_back(ij[k][1], v[k]);
  A.row_ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    int unique = 0;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (k == 0 || r[k].first != r[k - 1].first)
        ++unique;
    A.row_ptr[i + 1] = A.row_ptr[i] + unique;
  }
  A.col.resize(A.row_ptr[n]);
  A.val.resize(A.row_ptr[n]);
  for (int i = 0; i < n; ++i) {
    int out = A.row_ptr[i];
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (k > 0 && rows[i][k].first == rows[i][k - 1].first) {
        A.val[out - 1] += rows[i][k].second;
      } else {
        A.col[out] = rows[i][k].first;
        A.val[out] = rows[i][k].second;
        ++out;
      }
    }
  }
  return A;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix A;
  A.n = n;
  A.row_ptr.resize(n + 1);
  A.col.resize(n);
  A.val.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) A.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) A.col[i] = i;
  return A;
}

SparseMatrix SparseMatrix::submatrix(const std::vector<int>& idx) const {
  std::vector<int> global_to_local(n, -1);
  for (std::size_t k = 0; k < idx.size(); ++k) global_to_local[idx[k]] = (int)k;
  SparseMatrix S;
  S.n = static_cast<int>(idx.size());
  S.row_ptr.assign(S.n + 1, 0);
  for (int li = 0; li < S.n; ++li) {
    const int i = idx[li];
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (global_to_local[col[k]] >= 0) ++S.row_ptr[li + 1];
  }
  for (int i = 0; i < S.n; ++i) S.row_ptr[i + 1] += S.row_ptr[i];
  S.col.resize(S.row_ptr[S.n]);
  S.val.resize(S.row_ptr[S.n]);
  for (int li = 0; li < S.n; ++li) {
    int out = S.row_ptr[li];
    const int i = idx[li];
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int lj = global_to_local[col[k]];
      if (lj >= 0) {
        S.col[out] = lj;
        S.val[out] = val[k];
        ++out;
      }
    }
  }
  return S;
}

void spmv(const SparseMatrix& A, const std::vector<double>& x,
          std::vector<double>& y, int n_threads) {
  if (static_cast<int>(x.size()) != A.n)
    throw DimensionMismatch("spmv: dimension mismatch");
  y.assign(A.n, 0.0);
  auto rows = [&](int i0, int i1) {
    for (int i = i0; i < i1; ++i) {
      double s = 0;
      for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
        s += A.val[k] * x[A.col[k]];
      y[i] = s;
    }
  };
  if (n_threads <= 1 || A.n < 4096) {
    rows(0, A.n);
    return;
  }
  // Row-partitioned: each row is summed by exactly one thread, so the result
  // is identical to the serial one.
  std::vector<std::thread> ts;
  const int chunk = (A.n + n_threads - 1) / n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const int i0 = t * chunk, i1 = std::min(A.n, i0 + chunk);
    if (i0 < i1) ts.emplace_back(rows, i0, i1);
  }
  for (auto& t : ts) t.join();
}

std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x,
                         int n_threads) {
  std::vector<double> y;
  spmv(A, x, y, n_threads);
  return y;
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_matrix_market: cannot open " + path);
  f << "%%MatrixMarket matrix coordinate real general\n";
  f << A.n << " " << A.n << " " << A.nnz() << "\n";
  f.precision(17);
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      f << i + 1 << " " << A.col[k] + 1 << " " << A.val[k] << "\n";
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_matrix_market: cannot open " + path);
  std::string line;
  bool symmetric = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '%') {
      if (line.find("symmetric") != std::string::npos) symmetric = true;
      continue;
    }
    break;
  }
  std::istringstream hdr(line);
  int rows, cols, nnz;
  hdr >> rows >> cols >> nnz;
  if (!hdr || rows != cols)
    throw std::runtime_error("read_matrix_market: bad header in " + path);
  std::vector<std::array<int, 2>> ij;
  std::vector<double> v;
  for (int k = 0; k < nnz; ++k) {
    int i, j;
    double x;
    f >> i >> j >> x;
    ij.push_back({i - 1, j - 1});
    v.push_back(x);
    if (symmetric && i != j) {
      ij.push_back({j - 1, i - 1});
      v.push_back(x);
    }
  }
  return SparseMatrix::from_triplets(rows, ij, v);
}

void write_matrix_market_vector(const std::vector<double>& v,
                                const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "%%MatrixMarket matrix array real general\n";
  f << v.size() << " 1\n";
  f.precision(17);
  for (double x : v) f << x << "\n";
}

std::vector<double> read_matrix_market_vector(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  while (std::getline(f, line) && (line.empty() || line[0] == '%')) {
  }
  std::istringstream hdr(line);
  int rows, cols;
  hdr >> rows >> cols;
  std::vector<double> v(rows);
  for (int i = 0; i < rows; ++i) f >> v[i];
  return v;
}

struct DirectFactor::Impl {
  // Supernodal Cholesky for large problems; the simplicial LDLT is kept for
  // small systems and as the diagnostic path (it exposes the pivot values).
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> llt;
  bool supernodal = false;
};

DirectFactor::DirectFactor(const SparseMatrix& A)
    : impl_(std::make_unique<Impl>()), n_(A.n) {
  Eigen::SparseMatrix<double> M(A.n, A.n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nnz());
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      trips.emplace_back(i, A.col[k], A.val[k]);
  M.setFromTriplets(trips.begin(), trips.end());
  impl_->supernodal = A.n > 2000;
  if (impl_->supernodal) {
    impl_->llt.compute(M);
    if (impl_->llt.info() == Eigen::Success) return;
    impl_->supernodal = false;  // fall through for a pivot-level diagnosis
  }
  impl_->ldlt.compute(M);
  if (impl_->ldlt.info() != Eigen::Success)
    throw IndefiniteMatrix("DirectFactor: factorization failed");
  const auto& D = impl_->ldlt.vectorD();
  for (int i = 0; i < D.size(); ++i)
    if (D(i) <= 0)
      throw IndefiniteMatrix("DirectFactor: non-positive pivot at index " +
                             std::to_string(i));
}

DirectFactor::~DirectFactor() = default;
DirectFactor::DirectFactor(DirectFactor&&) noexcept = default;
DirectFactor& DirectFactor::operator=(DirectFactor&&) noexcept = default;

std::vector<double> DirectFactor::solve(const std::vector<double>& b) const {
  if (static_cast<int>(b.size()) != n_)
    throw DimensionMismatch("DirectFactor::solve: dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> bm(b.data(), n_);
  Eigen::VectorXd x =
      impl_->supernodal ? impl_->llt.solve(bm).eval() : impl_->ldlt.solve(bm).eval();
  return std::vector<double>(x.data(), x.data() + n_);
}

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

SolveReport cg(const SparseMatrix& A, const std::vector<double>& b,
               const Preconditioner& P, double tol, int maxit,
               std::vector<double>& x, int n_threads) {
  if (static_cast<int>(b.size()) != A.n)
    throw DimensionMismatch("cg: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.preconditioner = P.name();

  if (x.empty()) x.assign(A.n, 0.0);
  std::vector<double> r = b, tmp, z(A.n), p;
  if (dot(b, b) == 0.0) {  // homogeneous system: the solution is zero
    x.assign(A.n, 0.0);
    rep.residual_history.push_back(0.0);
    rep.converged = true;
    return rep;
  }
  spmv(A, x, tmp, n_threads);
  for (int i = 0; i < A.n; ++i) r[i] -= tmp[i];

  P.apply(r, z);
  double rz = dot(r, z);
  if (rz < 0) throw PreconditionerFault("cg: negative preconditioned inner product");
  const double rz0 = rz;
  const double bnorm = std::sqrt(dot(b, b));

  auto finish = [&](bool conv, int it) {
    rep.converged = conv;
    rep.iterations = it;
    spmv(A, x, tmp, n_threads);
    double rr = 0;
    for (int i = 0; i < A.n; ++i) {
      const double d = b[i] - tmp[i];
      rr += d * d;
    }
    rep.true_relative_residual =
        (bnorm > 0) ? std::sqrt(rr) / bnorm : std::sqrt(rr);
    rep.wall_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    return rep;
  };

  if (rz0 == 0) {
    rep.residual_history.push_back(0.0);
    return finish(true, 0);
  }

  rep.residual_history.push_back(1.0);  // initial relative residual
  p = z;
  for (int it = 1; it <= maxit; ++it) {
    spmv(A, p, tmp, n_threads);
    const double pAp = dot(p, tmp);
    if (pAp <= 0)
      throw PreconditionerFault("cg: operator not positive definite (p'Ap <= 0)");
    const double alpha = rz / pAp;
    for (int i = 0; i < A.n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * tmp[i];
    }
    P.apply(r, z);
    const double rz_new = dot(r, z);
    if (rz_new < 0)
      throw PreconditionerFault("cg: negative preconditioned inner product");
    const double rel = std::sqrt(rz_new / rz0);
    rep.residual_history.push_back(rel);
    if (rel <= tol) return finish(true, it);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < A.n; ++i) p[i] = z[i] + beta * p[i];
  }
  return finish(false, maxit);
}

}  // namespace lamfe
