#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "POD and snapshot collection are offline modules and must not be included in an online-only build"
#endif

#include <functional>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "dgrom/affine_operator.hpp"
#include "dgrom/fom.hpp"
#include "dgrom/reduced.hpp"
#include "dgrom/sampling.hpp"

namespace dgrom {

struct SnapshotSet {
  Matrix S_v, S_p;
  std::vector<ParameterTuple> mu;

  Index n_s() const { return mu.size(); }
};

/// Solves the full-order problem at each parameter, assembling through the affine expansion.
inline SnapshotSet collect_snapshots(const AffineOperator& op, const DomainDescription& domain,
                                     const std::vector<ParameterTuple>& mu) {
  if (mu.empty()) throw Error("at least one snapshot is required");
  SnapshotSet s;
  s.S_v.resize(Eigen::Index(op.n_u()), Eigen::Index(mu.size()));
  s.S_p.resize(Eigen::Index(op.n_p()), Eigen::Index(mu.size()));
  for (Index j = 0; j < mu.size(); ++j) {
    try {
      const StokesSolution sol = solve_stokes(op.assemble(op.evaluate_theta(build_maps(domain, mu[j]))));
      if (!sol.U.allFinite() || !sol.P.allFinite()) throw Error("non-finite solution");
      s.S_v.col(Eigen::Index(j)) = sol.U;
      s.S_p.col(Eigen::Index(j)) = sol.P;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "snapshot " << j << " at mu = (" << mu[j].x() << ", " << mu[j].y() << ") failed: " << e.what();
      throw Error(os.str());
    }
  }
  s.mu = mu;
  return s;
}

enum class PodMethod {
  factored,  // SVD of L^T S with M = L L^T
  gram,      // eigendecomposition of S^T M S
};

struct PodOptions {
  Index n = 0;               // requested size; 0 selects by energy or keeps the numerical rank
  double energy_tol = 0.0;   // keep the smallest N with tail / total <= energy_tol
  double drop_tol = 1e-12;   // eigenvalues below drop_tol * theta_1 are numerical noise
  PodMethod method = PodMethod::factored;
};

/// Snapshot POD in the M inner product. Both methods give the eigenpairs of S^T M S; the
/// factored one never forms the Gram matrix, so small eigenvalues keep their relative accuracy
/// and B^T M B = I holds to round-off regardless of the eigenvalue spread.
inline PodBasis pod(const Matrix& S, const SpMat& M, const PodOptions& opts = {}) {
  if (S.cols() == 0 || S.rows() == 0) throw Error("empty snapshot matrix");
  if (M.rows() != S.rows() || M.cols() != S.rows()) throw Error("inner-product matrix does not match snapshot size");
  if (!S.allFinite()) throw Error("snapshot matrix has non-finite entries");
  if (S.norm() == 0.0) throw Error("snapshot matrix is zero");
  const Eigen::Index ns = S.cols();

  PodBasis out;
  Matrix V;  // right singular vectors / Gram eigenvectors, columns in decreasing order
  Matrix U;  // factored: left singular vectors of L^T S
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> llt;

  if (opts.method == PodMethod::factored) {
    llt.compute(M);
    if (llt.info() != Eigen::Success) throw Error("inner-product matrix is not SPD");
    const Matrix X = llt.matrixU() * S;
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.eigenvalues = svd.singularValues().array().square();
    U = svd.matrixU();
    V = svd.matrixV();
    out.min_raw_eigenvalue = 0.0;
  } else {
    Matrix G = S.transpose() * (M * S);
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    if (es.info() != Eigen::Success) throw Error("Gram eigendecomposition failed");
    out.eigenvalues = es.eigenvalues().reverse();
    V = es.eigenvectors().rowwise().reverse();
    out.min_raw_eigenvalue = out.eigenvalues.minCoeff() / out.eigenvalues[0];
    out.eigenvalues = out.eigenvalues.cwiseMax(0.0);
  }

  const double top = out.eigenvalues[0];
  out.rank = 0;
  while (out.rank < Index(ns) && out.eigenvalues[Eigen::Index(out.rank)] > opts.drop_tol * top) ++out.rank;

  Index n = out.rank;
  if (opts.n > 0) {
    if (opts.n > out.rank)
      throw BasisSizeError("requested N = " + std::to_string(opts.n) + " exceeds the numerical rank of the snapshots",
                           out.rank);
    n = opts.n;
  } else if (opts.energy_tol > 0.0) {
    const double total = out.eigenvalues.sum();
    double tail = total;
    n = 0;
    while (n < out.rank && tail > opts.energy_tol * total) tail -= out.eigenvalues[Eigen::Index(n++)];
    n = std::max<Index>(n, 1);
  }

  const auto nn = Eigen::Index(n);
  if (opts.method == PodMethod::factored) {
    out.B = llt.matrixU().solve(U.leftCols(nn));
  } else {
    const Vector scale = out.eigenvalues.head(nn).cwiseSqrt().cwiseInverse();
    out.B = S * V.leftCols(nn) * scale.asDiagonal();
  }
  return out;
}

/// sum_j ||s_j - B B^T M s_j||_M^2 over the leading n modes.
inline double projection_error(const Matrix& S, const PodBasis& basis, const SpMat& M, Index n) {
  if (n > basis.size()) throw BasisSizeError("projection size exceeds the basis", basis.size());
  const Matrix MS = M * S;
  const Matrix R = S - basis.B.leftCols(Eigen::Index(n)) * (basis.B.leftCols(Eigen::Index(n)).transpose() * MS);
  return (R.transpose() * (M * R)).trace();
}

/// ||B^T M B - I||_max.
inline double orthonormality_defect(const PodBasis& basis, const SpMat& M) {
  const Matrix G = basis.B.transpose() * (M * basis.B);
  return (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

/// Galerkin projection of every affine block onto the velocity and pressure bases.
inline ReducedOperator project_operator(const AffineOperator& op, const PodBasis& velocity, const PodBasis& pressure) {
  if (velocity.n_dofs() != op.n_u() || pressure.n_dofs() != op.n_p())
    throw Error("basis dimensions do not match the affine operator");
  ReducedOperator r;
  r.n_v = velocity.size();
  r.n_p = pressure.size();
  r.alpha_scaling = op.alpha_scaling();
  const Matrix& Bv = velocity.B;
  const Matrix& Bp = pressure.B;
  for (const auto& t : op.terms()) {
    r.terms.push_back(t.term);
    r.recipes.push_back(t.theta);
    switch (target_of(t.term)) {
      case Target::A: r.blocks.push_back(Bv.transpose() * (t.block * Bv)); break;
      case Target::B: r.blocks.push_back(Bv.transpose() * (t.block * Bp)); break;
      case Target::F1: r.blocks.push_back(Bv.transpose() * t.vector); break;
      case Target::F2: r.blocks.push_back(Bp.transpose() * t.vector); break;
    }
  }
  return r;
}

}  // namespace dgrom
