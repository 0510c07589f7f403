#include "lamfe/schwarz.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "lamfe/geometry.hpp"

namespace lamfe {

Decomposition decompose(const StructuredMesh& mesh, const DofMap& dofs,
                        int n_sub, int overlap_layers, bool periodic_width) {
  if (n_sub < 1) throw InvalidParameter("decompose: n_sub must be >= 1");
  if (overlap_layers < 1 && n_sub > 1)
    throw InvalidParameter("decompose: overlap_layers must be >= 1");
  const int n_cols = mesh.n_l;
  if (n_sub > n_cols)
    throw OverDecomposition("decompose: n_sub exceeds the " +
                            std::to_string(n_cols) + " width columns");

  Decomposition dec;
  dec.n_sub = n_sub;
  dec.overlap_layers = overlap_layers;
  dec.owned_elems.resize(n_sub);
  dec.overlap_elems.resize(n_sub);
  dec.subdomain_dofs.resize(n_sub);

  // Balanced contiguous column ranges.
  std::vector<int> col_owner(n_cols);
  {
    const int base = n_cols / n_sub, rem = n_cols % n_sub;
    int col = 0;
    for (int j = 0; j < n_sub; ++j) {
      const int cnt = base + (j < rem ? 1 : 0);
      for (int k = 0; k < cnt; ++k) col_owner[col++] = j;
    }
  }
  // Column membership of each subdomain after overlap growth.
  std::vector<std::vector<char>> col_in(n_sub, std::vector<char>(n_cols, 0));
  for (int c = 0; c < n_cols; ++c) col_in[col_owner[c]][c] = 1;
  for (int j = 0; j < n_sub; ++j) {
    std::vector<char> grown = col_in[j];
    for (int layer = 0; layer < overlap_layers; ++layer) {
      std::vector<char> next = grown;
      for (int c = 0; c < n_cols; ++c) {
        if (!grown[c]) continue;
        if (c > 0) next[c - 1] = 1;
        if (c + 1 < n_cols) next[c + 1] = 1;
        if (periodic_width) {
          if (c == 0) next[n_cols - 1] = 1;
          if (c == n_cols - 1) next[0] = 1;
        }
      }
      grown = next;
    }
    col_in[j] = grown;
  }

  const int ne = mesh.n_elems();
  std::vector<int> zone_count(ne, 0);
  for (int e = 0; e < ne; ++e) {
    const int c = mesh.elem_index[e][1];
    dec.owned_elems[col_owner[c]].push_back(e);
    for (int j = 0; j < n_sub; ++j)
      if (col_in[j][c]) {
        dec.overlap_elems[j].push_back(e);
        ++zone_count[e];
      }
  }
  dec.in_overlap_zone.assign(ne, 0);
  for (int e = 0; e < ne; ++e)
    if (zone_count[e] >= 2) dec.in_overlap_zone[e] = 1;

  for (int j = 0; j < n_sub; ++j) {
    std::vector<char> seen(dofs.n_dofs, 0);
    for (int e : dec.overlap_elems[j])
      for (int i = 0; i < 20; ++i) {
        const int node = mesh.connectivity[e][i];
        for (int c = 0; c < 3; ++c) {
          const int d = dofs.dof(node, c);
          if (!seen[d] && !dofs.constrained[d]) {
            seen[d] = 1;
            dec.subdomain_dofs[j].push_back(d);
          }
        }
      }
    std::sort(dec.subdomain_dofs[j].begin(), dec.subdomain_dofs[j].end());
  }
  return dec;
}

PartitionOfUnity build_partition_of_unity(const Decomposition& dec,
                                          int n_dofs) {
  std::vector<int> count(n_dofs, 0);
  for (const auto& I : dec.subdomain_dofs)
    for (int d : I) ++count[d];
  PartitionOfUnity pou;
  pou.weights.resize(dec.n_sub);
  for (int j = 0; j < dec.n_sub; ++j) {
    pou.weights[j].resize(dec.subdomain_dofs[j].size());
    for (std::size_t k = 0; k < dec.subdomain_dofs[j].size(); ++k)
      pou.weights[j][k] = 1.0 / count[dec.subdomain_dofs[j][k]];
  }
  return pou;
}

SparseMatrix dirichlet_submatrix(const SparseMatrix& K,
                                 const std::vector<int>& interior_dofs) {
  return K.submatrix(interior_dofs);
}

LocalMatrices local_matrices(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    const Decomposition& dec, int j,
    const std::function<ElementMatrix(int)>& element_matrix) {
  LocalMatrices out;
  out.dofs = dec.subdomain_dofs[j];

  std::vector<int> local_of(K.n, -1);
  for (std::size_t k = 0; k < out.dofs.size(); ++k)
    local_of[out.dofs[k]] = (int)k;

  // A is the energy (Neumann) matrix of the subdomain's elements: natural
  // conditions on the artificial boundary, essential conditions only where
  // the global problem has them (constrained dofs are not in the subdomain
  // dof set). A_tilde is the fully assembled principal submatrix of K, which
  // additionally carries the stiffness of the elements outside the
  // subdomain; the mismatch between the two at the artificial boundary is
  // what the eigenproblem measures.
  std::vector<std::array<int, 2>> ij_a;
  std::vector<double> v_a;
  for (int e : dec.overlap_elems[j]) {
    const ElementMatrix Ke = element_matrix(e);
    std::array<int, 60> loc;
    for (int i = 0; i < 20; ++i) {
      const int n = mesh.connectivity[e][i];
      for (int c = 0; c < 3; ++c) loc[3 * i + c] = local_of[dofs.dof(n, c)];
    }
    for (int a = 0; a < 60; ++a) {
      if (loc[a] < 0) continue;
      for (int b = 0; b < 60; ++b) {
        if (loc[b] < 0) continue;
        ij_a.push_back({loc[a], loc[b]});
        v_a.push_back(Ke(a, b));
      }
    }
  }
  const int nl = (int)out.dofs.size();
  out.A = SparseMatrix::from_triplets(nl, ij_a, v_a);
  out.A_tilde = K.submatrix(out.dofs);
  return out;
}

namespace {

Eigen::MatrixXd to_dense(const SparseMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.n, A.n);
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      D(i, A.col[k]) += A.val[k];
  return D;
}

double trace_of(const SparseMatrix& A) {
  double t = 0;
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (A.col[k] == i) t += A.val[k];
  return t;
}

constexpr double kHugeEigenvalue = 1e300;

// B v = mu (A + sigma B) v  <=>  A v = lambda B v with lambda = 1/mu - sigma.
double lambda_from_mu(double mu, double sigma) {
  if (mu <= 1.0 / kHugeEigenvalue) return kHugeEigenvalue;
  return std::max(0.0, 1.0 / mu - sigma);
}

SparseMatrix shifted_sum(const SparseMatrix& A, const SparseMatrix& B,
                         double sigma) {
  std::vector<std::array<int, 2>> ij;
  std::vector<double> v;
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      ij.push_back({i, A.col[k]});
      v.push_back(A.val[k]);
    }
  for (int i = 0; i < B.n; ++i)
    for (int k = B.row_ptr[i]; k < B.row_ptr[i + 1]; ++k) {
      ij.push_back({i, B.col[k]});
      v.push_back(sigma * B.val[k]);
    }
  return SparseMatrix::from_triplets(A.n, ij, v);
}

// Dense path: B v = mu M v; largest mu <-> smallest lambda.
EigenPairs dense_geneo(const SparseMatrix& M, const SparseMatrix& B_sp,
                       int n_ev, double sigma) {
  const Eigen::MatrixXd Bd = to_dense(B_sp);
  const Eigen::MatrixXd Md = to_dense(M);
  {
    Eigen::LLT<Eigen::MatrixXd> llt(Md);
    if (llt.info() != Eigen::Success)
      throw IndefiniteMatrix("dense_geneo: shifted pencil is not SPD");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Bd, Md, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("geneo_eigensolve: dense eigensolver failed");
  EigenPairs out;
  const int n = M.n;
  const int keep = std::min(n_ev, n);
  for (int k = 0; k < keep; ++k) {
    const int idx = n - 1 - k;  // descending mu
    out.eigenvalues.push_back(lambda_from_mu(es.eigenvalues()(idx), sigma));
    const auto col = es.eigenvectors().col(idx);
    out.vectors.emplace_back(col.data(), col.data() + n);
  }
  return out;
}

EigenPairs iterative_geneo(const SparseMatrix& M, const SparseMatrix& B_sp,
                           int n_ev, double sigma) {
  const int n = M.n;
  const int m = std::min(n, n_ev + 4);
  const DirectFactor fac(M);

  auto mult = [&](const SparseMatrix& S, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k)
        s += S.val[k] * x(S.col[k]);
      y(i) = s;
    }
    return y;
  };
  auto solveM = [&](const Eigen::VectorXd& b) {
    std::vector<double> bb(b.data(), b.data() + n);
    auto xx = fac.solve(bb);
    return Eigen::Map<Eigen::VectorXd>(xx.data(), n).eval();
  };

  std::mt19937 rng(20240917u + static_cast<unsigned>(n));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::MatrixXd X(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = uni(rng);

  Eigen::VectorXd mu_prev = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
  // The coarse space only needs the dominant subspace to modest accuracy,
  // so the iteration budget is kept small.
  for (int iter = 0; iter < 8; ++iter) {
    // Candidate block: M^-1 B X padded with X so the basis keeps full rank
    // where B is low-rank on this subdomain.
    Eigen::MatrixXd Z(n, 2 * m);
    for (int j = 0; j < m; ++j) Z.col(j) = solveM(mult(B_sp, X.col(j)));
    Z.rightCols(m) = X;

    // M-orthonormal basis Q of span(Z): modified Gram-Schmidt with cached
    // M-images of the accepted columns, two passes for stability.
    Eigen::MatrixXd Q(n, m), MQ(n, m);
    int got = 0;
    for (int j = 0; j < 2 * m && got < m; ++j) {
      Eigen::VectorXd v = Z.col(j);
      Eigen::VectorXd Mv = mult(M, v);
      const double nrm0 = v.dot(Mv);
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < got; ++k) {
          const double c = Q.col(k).dot(Mv);
          v -= c * Q.col(k);
          Mv -= c * MQ.col(k);
        }
      const double nrm2 = v.dot(Mv);
      if (nrm2 <= 1e-20 * std::max(nrm0, 1e-300)) continue;
      const double s = 1.0 / std::sqrt(nrm2);
      Q.col(got) = s * v;
      MQ.col(got) = s * Mv;
      ++got;
    }
    const int mm = got;

    // Rayleigh-Ritz on the pencil (B, M): with Q'MQ = I this reduces to a
    // standard symmetric eigenproblem.
    Eigen::MatrixXd BQ(n, mm);
    for (int j = 0; j < mm; ++j) BQ.col(j) = mult(B_sp, Q.col(j));
    Eigen::MatrixXd Mr = Q.leftCols(mm).transpose() * BQ;
    Mr = 0.5 * (Mr + Mr.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mr);
    const Eigen::MatrixXd& V = es.eigenvectors();
    const Eigen::VectorXd& mus = es.eigenvalues();
    X.resize(n, mm);
    mu.resize(mm);
    for (int j = 0; j < mm; ++j) {  // descending mu first
      X.col(j) = Q.leftCols(mm) * V.col(mm - 1 - j);
      mu(j) = std::max(0.0, mus(mm - 1 - j));
    }
    const int check = std::min(n_ev, mm);
    bool done = iter > 0;
    for (int j = 0; j < check && done; ++j) {
      const double prev = j < mu_prev.size() ? mu_prev(j) : 0.0;
      if (std::abs(mu(j) - prev) > 1e-2 * std::max(mu(j), 1e-30)) done = false;
    }
    mu_prev = mu;
    if (done) break;
  }

  EigenPairs out;
  const int keep = std::min<int>(n_ev, X.cols());
  for (int j = 0; j < keep; ++j) {
    out.eigenvalues.push_back(lambda_from_mu(mu(j), sigma));
    out.vectors.emplace_back(X.col(j).data(), X.col(j).data() + n);
  }
  return out;
}

}  // namespace

EigenPairs geneo_eigensolve(const SparseMatrix& A, const SparseMatrix& A_tilde,
                            const std::vector<double>& pou_weights, int n_ev) {
  if (A.n != A_tilde.n || static_cast<int>(pou_weights.size()) != A.n)
    throw DimensionMismatch("geneo_eigensolve: dimension mismatch");
  if (n_ev <= 0) return {};
  // B = D A_tilde D
  SparseMatrix B = A_tilde;
  for (int i = 0; i < B.n; ++i)
    for (int k = B.row_ptr[i]; k < B.row_ptr[i + 1]; ++k)
      B.val[k] *= pou_weights[i] * pou_weights[B.col[k]];
  const double tr_b = trace_of(B);
  if (tr_b <= 0)
    throw DegenerateOverlap("geneo_eigensolve: weighted matrix is zero");
  // A may be singular (a floating subdomain has rigid-body modes), but the
  // shifted pencil B v = mu (A + sigma B) v is well posed: B is positive
  // definite on A's kernel because the assembled submatrix carries outside
  // stiffness there. The largest mu map to the smallest lambda = 1/mu -
  // sigma of the original problem, with kernel vectors at lambda = 0.
  const double sigma = 1e-8 * std::max(trace_of(A), 0.0) / tr_b;
  const SparseMatrix M = shifted_sum(A, B, sigma);
  try {
    if (A.n <= 600) return dense_geneo(M, B, n_ev, sigma);
    return iterative_geneo(M, B, n_ev, sigma);
  } catch (const IndefiniteMatrix&) {
    throw DegenerateOverlap(
        "geneo_eigensolve: shifted pencil is singular; the subdomain kernel "
        "carries no assembled stiffness");
  }
}

CoarseSpace build_coarse(const Decomposition& dec, const PartitionOfUnity& pou,
                         const std::vector<EigenPairs>& eigenpairs,
                         const SparseMatrix& K) {
  CoarseSpace cs;
  for (int j = 0; j < dec.n_sub; ++j) {
    const auto& I = dec.subdomain_dofs[j];
    const auto& w = pou.weights[j];
    for (std::size_t k = 0; k < eigenpairs[j].vectors.size(); ++k) {
      std::vector<double> vals(I.size());
      for (std::size_t i = 0; i < I.size(); ++i)
        vals[i] = w[i] * eigenpairs[j].vectors[k][i];
      cs.indices.push_back(I);
      cs.values.push_back(std::move(vals));
      cs.eigenvalues.push_back(eigenpairs[j].eigenvalues[k]);
    }
  }

  // Remove linearly dependent coarse vectors via pivoted Cholesky of the
  // Gram matrix R0 R0^T.
  const int c = cs.dim();
  if (c == 0) return cs;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(c, c);
  {
    // Sparse dot products; vectors from far-apart subdomains are disjoint.
    for (int a = 0; a < c; ++a)
      for (int b = a; b < c; ++b) {
        double s = 0;
        std::size_t ia = 0, ib = 0;
        const auto& Ia = cs.indices[a];
        const auto& Ib = cs.indices[b];
        while (ia < Ia.size() && ib < Ib.size()) {
          if (Ia[ia] < Ib[ib])
            ++ia;
          else if (Ia[ia] > Ib[ib])
            ++ib;
          else {
            s += cs.values[a][ia] * cs.values[b][ib];
            ++ia;
            ++ib;
          }
        }
        G(a, b) = G(b, a) = s;
      }
  }
  std::vector<char> keep(c, 1);
  {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(c, c);
    const double gmax = G.diagonal().maxCoeff();
    for (int i = 0; i < c; ++i) {
      double p = G(i, i);
      for (int k = 0; k < i; ++k)
        if (keep[k]) p -= L(i, k) * L(i, k);
      if (p <= 1e-10 * gmax) {
        keep[i] = 0;
        ++cs.removed_dependent;
        continue;
      }
      L(i, i) = std::sqrt(p);
      for (int r = i + 1; r < c; ++r) {
        double s = G(r, i);
        for (int k = 0; k < i; ++k)
          if (keep[k]) s -= L(r, k) * L(i, k);
        L(r, i) = s / L(i, i);
      }
    }
  }
  if (cs.removed_dependent > 0) {
    CoarseSpace filtered;
    for (int a = 0; a < c; ++a)
      if (keep[a]) {
        filtered.indices.push_back(std::move(cs.indices[a]));
        filtered.values.push_back(std::move(cs.values[a]));
        filtered.eigenvalues.push_back(cs.eigenvalues[a]);
      }
    filtered.removed_dependent = cs.removed_dependent;
    cs = std::move(filtered);
  }

  // K0 = R0 K R0^T.
  const int cc = cs.dim();
  cs.K0.resize(cc, cc);
  std::vector<double> y(K.n);
  for (int a = 0; a < cc; ++a) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t k = 0; k < cs.indices[a].size(); ++k) {
      const int row = cs.indices[a][k];
      const double zk = cs.values[a][k];
      for (int q = K.row_ptr[row]; q < K.row_ptr[row + 1]; ++q)
        y[K.col[q]] += K.val[q] * zk;  // K is symmetric
    }
    for (int b = 0; b < cc; ++b) {
      double s = 0;
      for (std::size_t k = 0; k < cs.indices[b].size(); ++k)
        s += cs.values[b][k] * y[cs.indices[b][k]];
      cs.K0(a, b) = s;
    }
  }
  cs.K0 = 0.5 * (cs.K0 + cs.K0.transpose().eval());
  cs.K0_factor.compute(cs.K0);
  if (cs.K0_factor.info() != Eigen::Success)
    throw std::runtime_error("build_coarse: coarse matrix not SPD");
  return cs;
}

SchwarzPreconditioner::SchwarzPreconditioner(const SparseMatrix& K,
                                             Decomposition dec, int n_threads)
    : dec_(std::move(dec)), n_threads_(n_threads), n_(K.n) {
  factors_.reserve(dec_.n_sub);
  for (int j = 0; j < dec_.n_sub; ++j)
    factors_.emplace_back(K.submatrix(dec_.subdomain_dofs[j]));
}

void SchwarzPreconditioner::set_coarse(CoarseSpace coarse) {
  coarse_ = std::move(coarse);
}

void SchwarzPreconditioner::apply(const std::vector<double>& r,
                                  std::vector<double>& z) const {
  z.assign(n_, 0.0);
  std::vector<std::vector<double>> local(dec_.n_sub);
  auto work = [&](int t, int nt) {
    for (int j = t; j < dec_.n_sub; j += nt) {
      const auto& I = dec_.subdomain_dofs[j];
      std::vector<double> rl(I.size());
      for (std::size_t k = 0; k < I.size(); ++k) rl[k] = r[I[k]];
      local[j] = factors_[j].solve(rl);
    }
  };
  if (n_threads_ <= 1 || dec_.n_sub == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> ts;
    const int nt = std::min(n_threads_, dec_.n_sub);
    for (int t = 0; t < nt; ++t) ts.emplace_back(work, t, nt);
    for (auto& t : ts) t.join();
  }
  // Deterministic combining order.
  for (int j = 0; j < dec_.n_sub; ++j) {
    const auto& I = dec_.subdomain_dofs[j];
    for (std::size_t k = 0; k < I.size(); ++k) z[I[k]] += local[j][k];
  }

  if (coarse_ && coarse_->dim() > 0) {
    const auto& cs = *coarse_;
    Eigen::VectorXd r0(cs.dim());
    for (int a = 0; a < cs.dim(); ++a) {
      double s = 0;
      for (std::size_t k = 0; k < cs.indices[a].size(); ++k)
        s += cs.values[a][k] * r[cs.indices[a][k]];
      r0(a) = s;
    }
    const Eigen::VectorXd y0 = cs.K0_factor.solve(r0);
    for (int a = 0; a < cs.dim(); ++a)
      for (std::size_t k = 0; k < cs.indices[a].size(); ++k)
        z[cs.indices[a][k]] += cs.values[a][k] * y0(a);
  }
}

std::unique_ptr<SchwarzPreconditioner> make_one_level(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    int n_sub, int overlap_layers, bool periodic_width, int n_threads) {
  Decomposition dec =
      decompose(mesh, dofs, n_sub, overlap_layers, periodic_width);
  return std::make_unique<SchwarzPreconditioner>(K, std::move(dec), n_threads);
}

std::unique_ptr<SchwarzPreconditioner> make_geneo(
    const SparseMatrix& K, const StructuredMesh& mesh, const DofMap& dofs,
    const StackingSequence& stacking, const MaterialCatalog& catalog,
    const QuadratureRule& q, const GeneoOptions& opt, bool periodic_width,
    GeneoSetupInfo* info) {
  const auto t0 = std::chrono::steady_clock::now();
  Decomposition dec =
      decompose(mesh, dofs, opt.n_sub, opt.overlap_layers, periodic_width);
  const PartitionOfUnity pou = build_partition_of_unity(dec, K.n);
  auto prec = std::make_unique<SchwarzPreconditioner>(K, dec, opt.n_threads);
  const Decomposition& d = prec->decomposition();
  if (d.n_sub == 1) {
    // A single subdomain is already a direct solve; no coarse space needed.
    if (info) {
      info->coarse_dim = 0;
      info->setup_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
    }
    return prec;
  }

  auto elem_matrix = [&](int e) {
    return mesh_element_matrix(mesh, e, stacking, catalog, q);
  };
  std::vector<EigenPairs> pairs(d.n_sub);
  auto work = [&](int t, int nt) {
    for (int j = t; j < d.n_sub; j += nt) {
      const LocalMatrices lm = local_matrices(K, mesh, dofs, d, j, elem_matrix);
      // Partition-of-unity weights restricted to the eigenproblem's dof set.
      std::vector<double> w(lm.dofs.size());
      {
        std::size_t pos = 0;
        const auto& I = d.subdomain_dofs[j];
        for (std::size_t k = 0; k < lm.dofs.size(); ++k) {
          while (I[pos] != lm.dofs[k]) ++pos;
          w[k] = pou.weights[j][pos];
        }
      }
      pairs[j] = geneo_eigensolve(lm.A, lm.A_tilde, w, opt.n_ev);
      // Zero-extend the eigenvectors to the subdomain dof set so the coarse
      // assembly can treat every subdomain uniformly.
      {
        std::vector<int> local_pos(lm.dofs.size());
        std::size_t pos = 0;
        const auto& I = d.subdomain_dofs[j];
        for (std::size_t k = 0; k < lm.dofs.size(); ++k) {
          while (I[pos] != lm.dofs[k]) ++pos;
          local_pos[k] = (int)pos;
        }
        for (auto& v : pairs[j].vectors) {
          std::vector<double> ext(I.size(), 0.0);
          for (std::size_t k = 0; k < v.size(); ++k) ext[local_pos[k]] = v[k];
          v = std::move(ext);
        }
      }
      // Keep only genuinely low-energy pairs. Vectors supported inside the
      // overlap zone saturate the pencil at 1/w^2 (w the zone weight), so a
      // cutoff below that ceiling discards the uninformative cluster.
      const double cutoff = opt.ev_threshold.value_or(1.0);
      {
        EigenPairs filtered;
        for (std::size_t k = 0; k < pairs[j].eigenvalues.size(); ++k)
          if (pairs[j].eigenvalues[k] < cutoff) {
            filtered.eigenvalues.push_back(pairs[j].eigenvalues[k]);
            filtered.vectors.push_back(std::move(pairs[j].vectors[k]));
          }
        pairs[j] = std::move(filtered);
      }
      // Augment with the subdomain's rigid-body motions (Nicolaides coarse
      // space). Wide subdomains are too stiff to produce low eigenvalues,
      // yet their dominant one-level error is still near-rigid; the weighted
      // rigid modes capture it for any subdomain shape. Duplicates of
      // eigenvectors are removed later by the Gram reduction.
      if (opt.n_ev > 0) {
        const auto& I = d.subdomain_dofs[j];
        std::vector<int> pos_of(K.n, -1);
        for (std::size_t k = 0; k < I.size(); ++k) pos_of[I[k]] = (int)k;
        std::vector<char> node_in(mesh.n_nodes(), 0);
        for (int e : d.overlap_elems[j])
          for (int i = 0; i < 20; ++i) node_in[mesh.connectivity[e][i]] = 1;
        double cx = 0, cy = 0, cz = 0;
        int nn = 0;
        for (int n = 0; n < mesh.n_nodes(); ++n)
          if (node_in[n]) {
            cx += mesh.nodes[n][0];
            cy += mesh.nodes[n][1];
            cz += mesh.nodes[n][2];
            ++nn;
          }
        cx /= nn, cy /= nn, cz /= nn;
        for (int m = 0; m < 6; ++m) {
          std::vector<double> v(I.size(), 0.0);
          for (int n = 0; n < mesh.n_nodes(); ++n) {
            if (!node_in[n]) continue;
            const double dx = mesh.nodes[n][0] - cx;
            const double dy = mesh.nodes[n][1] - cy;
            const double dz = mesh.nodes[n][2] - cz;
            const double mode[6][3] = {{1, 0, 0},   {0, 1, 0},  {0, 0, 1},
                                       {0, -dz, dy}, {dz, 0, -dx}, {-dy, dx, 0}};
            for (int c = 0; c < 3; ++c) {
              const int p = pos_of[dofs.dof(n, c)];
              if (p >= 0) v[p] = mode[m][c];
            }
          }
          double nrm = 0;
          for (double x : v) nrm += x * x;
          if (nrm <= 0) continue;
          nrm = 1.0 / std::sqrt(nrm);
          for (double& x : v) x *= nrm;
          pairs[j].eigenvalues.push_back(0.0);
          pairs[j].vectors.push_back(std::move(v));
        }
      }
    }
  };
  if (opt.n_threads <= 1 || d.n_sub == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> ts;
    const int nt = std::min(opt.n_threads, d.n_sub);
    for (int t = 0; t < nt; ++t) ts.emplace_back(work, t, nt);
    for (auto& t : ts) t.join();
  }

  CoarseSpace cs = build_coarse(d, pou, pairs, K);
  if (info) {
    info->coarse_dim = cs.dim();
    for (int j = 0; j < d.n_sub; ++j)
      info->max_kept_eigenvalue.push_back(
          pairs[j].eigenvalues.empty()
              ? 0.0
              : *std::max_element(pairs[j].eigenvalues.begin(),
                                  pairs[j].eigenvalues.end()));
    info->setup_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  prec->set_coarse(std::move(cs));
  return prec;
}

}  // namespace lamfe
