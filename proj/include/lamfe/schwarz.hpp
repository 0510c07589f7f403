#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lamfe/assembly.hpp"
#include "lamfe/sparse.hpp"

namespace lamfe {

struct OverDecomposition : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Overlapping decomposition into width-direction slabs. Owned element sets
/// partition the mesh; overlap sets extend them by whole element columns.
struct Decomposition {
  int n_sub = 0;
  int overlap_layers = 0;
  std::vector<std::vector<int>> owned_elems;
  std::vector<std::vector<int>> overlap_elems;
  /// Unconstrained dofs carried by the nodes of each subdomain's elements.
  /// The local solves put zero Dirichlet conditions on everything outside
  /// this set. Sorted ascending; this is also the local-to-global map.
  std::vector<std::vector<int>> subdomain_dofs;
  /// Elements lying in more than one subdomain's overlap set (the overlap
  /// zone used for the GenEO right-hand matrices).
  std::vector<char> in_overlap_zone;  // per element
};

/// Slab partition along the width direction. With periodic_width the column
/// adjacency wraps around, so overlap extends across the seam.
Decomposition decompose(const StructuredMesh& mesh, const DofMap& dofs,
                        int n_sub, int overlap_layers,
                        bool periodic_width = false);

/// Multiplicity-based partition of unity over the subdomain dof sets:
/// weight = 1 / (number of subdomains carrying the dof).
struct PartitionOfUnity {
  std::vector<std::vector<double>> weights;  // aligned with subdomain_dofs
};
PartitionOfUnity build_partition_of_unity(const Decomposition& dec, int n_dofs);

struct LocalMatrices {
  /// Index set both matrices live on (the subdomain dof set).
  std::vector<int> dofs;
  /// Energy (Neumann) matrix of the subdomain's elements: natural
  /// conditions on the artificial boundary, essential conditions only where
  /// the global problem has them.
  SparseMatrix A;
  /// Fully assembled principal submatrix of K on the same index set; on the
  /// artificial boundary it additionally carries the stiffness of the
  /// neighbouring subdomains' elements.
  SparseMatrix A_tilde;
};

/// Assembles the subdomain energy matrix and extracts the assembled
/// submatrix (element_matrix(e) must reproduce the matrices used in the
/// global assembly).
LocalMatrices local_matrices(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    const Decomposition& dec, int subdomain,
    const std::function<ElementMatrix(int)>& element_matrix);

/// Dirichlet submatrix for a hand-built index set (testing hook).
SparseMatrix dirichlet_submatrix(const SparseMatrix& K,
                                 const std::vector<int>& interior_dofs);

struct EigenPairs {
  std::vector<double> eigenvalues;           // ascending
  std::vector<std::vector<double>> vectors;  // local dimension
};

/// Smallest eigenpairs of A v = lambda (D A_tilde D) v with D the partition
/// of unity diagonal. Low eigenvalues flag modes whose subdomain energy is
/// small compared to the assembled stiffness seen at the artificial
/// boundary -- exactly the error components the one-level method treats
/// poorly. A may be singular (floating subdomains return their rigid-body
/// modes at lambda = 0); the solve uses a slightly shifted pencil, which is
/// positive definite since the assembled submatrix has full rank. Dense
/// reduction for small problems, a deterministic inverted subspace
/// iteration otherwise.
EigenPairs geneo_eigensolve(const SparseMatrix& A, const SparseMatrix& A_tilde,
                            const std::vector<double>& pou_weights, int n_ev);

struct CoarseSpace {
  // Each basis vector stored sparse on its subdomain's interior dofs.
  std::vector<std::vector<int>> indices;
  std::vector<std::vector<double>> values;
  std::vector<double> eigenvalues;  // matching lambda per vector
  Eigen::MatrixXd K0;
  Eigen::LLT<Eigen::MatrixXd> K0_factor;
  int dim() const { return static_cast<int>(indices.size()); }
  int removed_dependent = 0;
};

CoarseSpace build_coarse(const Decomposition& dec, const PartitionOfUnity& pou,
                         const std::vector<EigenPairs>& eigenpairs,
                         const SparseMatrix& K);

/// Additive Schwarz preconditioner: one-level when no coarse space is set,
/// two-level (GenEO) otherwise.
class SchwarzPreconditioner : public Preconditioner {
 public:
  SchwarzPreconditioner(const SparseMatrix& K, Decomposition dec,
                        int n_threads = 1);

  void set_coarse(CoarseSpace coarse);
  bool has_coarse() const { return coarse_.has_value(); }
  int coarse_dim() const { return coarse_ ? coarse_->dim() : 0; }

  void apply(const std::vector<double>& r, std::vector<double>& z) const override;
  std::string name() const override {
    return coarse_ ? "geneo" : "one-level";
  }

  const Decomposition& decomposition() const { return dec_; }
  const DirectFactor& factor(int subdomain) const { return factors_[subdomain]; }

 private:
  Decomposition dec_;
  std::vector<DirectFactor> factors_;
  std::optional<CoarseSpace> coarse_;
  int n_threads_ = 1;
  int n_ = 0;
};

struct GeneoOptions {
  int n_sub = 4;
  int overlap_layers = 2;
  int n_ev = 10;                      // per subdomain
  std::optional<double> ev_threshold; // alternative: lambda < threshold
  int n_threads = 1;
};

struct GeneoSetupInfo {
  int coarse_dim = 0;
  std::vector<double> max_kept_eigenvalue;  // per subdomain
  double setup_time_s = 0;
};

/// Builds the full two-level GenEO preconditioner for an assembled,
/// constrained system (subdomain factorizations, eigensolves, coarse space).
std::unique_ptr<SchwarzPreconditioner> make_geneo(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    const StackingSequence& stacking, const MaterialCatalog& catalog,
    const QuadratureRule& q, const GeneoOptions& opt, bool periodic_width,
    GeneoSetupInfo* info = nullptr);

/// One-level variant behind the same interface.
std::unique_ptr<SchwarzPreconditioner> make_one_level(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    int n_sub, int overlap_layers, bool periodic_width, int n_threads = 1);

}  // namespace lamfe
