#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamfe {

/// Compressed-row sparse matrix. Column indices are sorted and unique per
/// row; symmetric matrices store both triangles.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  int nnz() const { return static_cast<int>(col.size()); }
  double symmetry_error() const;  // max |A - A^T| / max |A|

  /// From unsorted triplets with duplicate summation.
  static SparseMatrix from_triplets(int n,
                                    const std::vector<std::array<int, 2>>& ij,
                                    const std::vector<double>& v);
  static SparseMatrix identity(int n);

  /// Extracts the principal submatrix on the given sorted index set.
  SparseMatrix submatrix(const std::vector<int>& indices) const;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void spmv(const SparseMatrix& A, const std::vector<double>& x,
          std::vector<double>& y, int n_threads = 1);
std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x,
                         int n_threads = 1);

// Matrix Market coordinate format (general symmetric-stored-full matrices
// and dense vectors as array format).
void write_matrix_market(const SparseMatrix& A, const std::string& path);
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market_vector(const std::vector<double>& v,
                                const std::string& path);
std::vector<double> read_matrix_market_vector(const std::string& path);

struct IndefiniteMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse LDL^T factorization with fill-reducing (AMD) ordering for SPD
/// matrices; used for subdomain and coarse solves and as a desk-scale
/// direct-solve oracle.
class DirectFactor {
 public:
  explicit DirectFactor(const SparseMatrix& A);
  ~DirectFactor();
  DirectFactor(DirectFactor&&) noexcept;
  DirectFactor& operator=(DirectFactor&&) noexcept;

  std::vector<double> solve(const std::vector<double>& b) const;
  int dim() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // preconditioned relative residual
  double true_relative_residual = 0;     // ||b - Ax|| / ||b|| at exit
  double wall_time_s = 0;
  std::string preconditioner = "none";
  bool converged = false;
};

struct PreconditionerFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(const std::vector<double>& r,
                     std::vector<double>& z) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPreconditioner : public Preconditioner {
 public:
  void apply(const std::vector<double>& r, std::vector<double>& z) const override {
    z = r;
  }
  std::string name() const override { return "none"; }
};

/// Preconditioned conjugate gradients. Convergence is tested on the relative
/// preconditioned residual sqrt(r'z); the true residual is reported at exit.
SolveReport cg(const SparseMatrix& A, const std::vector<double>& b,
               const Preconditioner& P, double tol, int maxit,
               std::vector<double>& x, int n_threads = 1);

}  // namespace lamfe
