#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "dgrom/affine_operator.hpp"
#include "dgrom/common.hpp"
#include "dgrom/geometry.hpp"
#include "dgrom/theta.hpp"

namespace dgrom {

/// M-orthonormal POD basis with the full eigenvalue list of its snapshot set.
struct PodBasis {
  Matrix B;            // N_dofs x N
  Vector eigenvalues;  // all n_s values, nonincreasing, clipped at zero
  Index rank = 0;      // eigenvalues above the drop tolerance
  double min_raw_eigenvalue = 0.0;  // relative to the largest, before clipping

  Index size() const { return Index(B.cols()); }
  Index n_dofs() const { return Index(B.rows()); }
};

/// Requested basis size is larger than what is available.
class BasisSizeError : public Error {
 public:
  BasisSizeError(const std::string& what, Index usable) : Error(what + "; usable maximum is " + std::to_string(usable)), usable_(usable) {}
  Index usable_maximum() const { return usable_; }

 private:
  Index usable_;
};

/// Galerkin-projected affine blocks, stored at the maximal basis sizes. Smaller bases use the
/// leading submatrices, since POD modes are nested.
struct ReducedOperator {
  Index n_v = 0, n_p = 0;
  bool alpha_scaling = false;
  std::vector<Term> terms;
  std::vector<ThetaRecipe> recipes;
  std::vector<Matrix> blocks;  // A: n_v x n_v, B: n_v x n_p, F1: n_v x 1, F2: n_p x 1

  ThetaVector evaluate_theta(const MapSet& ms) const { return dgrom::evaluate_theta(recipes, ms, alpha_scaling); }
};

struct ReducedSolution {
  Vector U_N, P_N;
  double residual = 0.0;  // relative residual of the reduced saddle system
  double rcond = 0.0;     // reciprocal condition estimate of the reduced saddle matrix
};

struct ReducedSystem {
  Matrix A, B;
  Vector F1, F2;

  Matrix saddle_matrix() const {
    const Eigen::Index nv = A.rows(), np = B.cols();
    Matrix K = Matrix::Zero(nv + np, nv + np);
    K.topLeftCorner(nv, nv) = A;
    K.topRightCorner(nv, np) = B;
    K.bottomLeftCorner(np, nv) = B.transpose();
    return K;
  }
  Vector rhs() const {
    Vector r(F1.size() + F2.size());
    r << F1, F2;
    return r;
  }
};

/// Reduced system for the leading n_v velocity and n_p pressure modes.
inline ReducedSystem assemble_reduced(const ReducedOperator& op, const ThetaVector& theta, Index n_v, Index n_p) {
  if (n_v == 0 || n_p == 0) throw Error("reduced basis size must be at least 1");
  if (n_v > op.n_v) throw BasisSizeError("velocity basis size " + std::to_string(n_v) + " exceeds the stored basis", op.n_v);
  if (n_p > op.n_p) throw BasisSizeError("pressure basis size " + std::to_string(n_p) + " exceeds the stored basis", op.n_p);
  if (theta.values.size() != op.blocks.size())
    throw Error("theta vector length " + std::to_string(theta.values.size()) + " does not match " +
                std::to_string(op.blocks.size()) + " reduced blocks");
  const auto nv = Eigen::Index(n_v), np = Eigen::Index(n_p);
  ReducedSystem s{Matrix::Zero(nv, nv), Matrix::Zero(nv, np), Vector::Zero(nv), Vector::Zero(np)};
  for (Index i = 0; i < op.blocks.size(); ++i) {
    const double th = theta.values[i];
    const Matrix& b = op.blocks[i];
    switch (target_of(op.terms[i])) {
      case Target::A: s.A.noalias() += th * b.topLeftCorner(nv, nv); break;
      case Target::B: s.B.noalias() += th * b.topLeftCorner(nv, np); break;
      case Target::F1: s.F1.noalias() += th * b.col(0).head(nv); break;
      case Target::F2: s.F2.noalias() += th * b.col(0).head(np); break;
    }
  }
  return s;
}

/// Dense LU with full pivoting. A singular reduced saddle matrix is reported, not regularized.
inline ReducedSolution solve_reduced(const ReducedSystem& s) {
  const Matrix K = s.saddle_matrix();
  const Vector rhs = s.rhs();
  const Eigen::FullPivLU<Matrix> lu(K);
  const auto nv = s.A.rows(), np = s.B.cols();
  const std::string where = " (N_v = " + std::to_string(nv) + ", N_p = " + std::to_string(np) + ")";
  if (!lu.isInvertible())
    throw Error("reduced saddle matrix is singular" + where +
                "; try a smaller N or inspect the pressure basis (no inf-sup stabilization is applied)");
  ReducedSolution sol;
  const Vector x = lu.solve(rhs);
  const double rn = rhs.norm();
  sol.residual = rn > 0.0 ? (K * x - rhs).norm() / rn : (K * x).norm();
  sol.rcond = lu.rcond();
  if (!(sol.residual <= 1e-10))
    throw Error("reduced solve residual " + std::to_string(sol.residual) + " exceeds 1e-10" + where +
                "; the reduced saddle matrix is nearly singular, try a smaller N");
  sol.U_N = x.head(nv);
  sol.P_N = x.tail(np);
  return sol;
}

inline ReducedSolution project_and_solve(const ReducedOperator& op, const MapSet& ms, Index n_v, Index n_p) {
  return solve_reduced(assemble_reduced(op, op.evaluate_theta(ms), n_v, n_p));
}

inline Vector reconstruct(const PodBasis& basis, const Vector& coefficients) {
  if (Index(coefficients.size()) > basis.size()) throw Error("more coefficients than basis vectors");
  return basis.B.leftCols(coefficients.size()) * coefficients;
}

/// ||x||_M for a sparse SPD matrix M.
inline double m_norm(const SpMat& M, const Vector& x) { return std::sqrt(std::max(0.0, x.dot(M * x))); }

struct RelativeErrors {
  double velocity = 0.0, pressure = 0.0;
};

/// Relative errors in the M_v and M_p norms.
inline RelativeErrors error_metrics(const Vector& U, const Vector& P, const Vector& U_rom, const Vector& P_rom,
                                    const SpMat& Mv, const SpMat& Mp) {
  if (U.size() != U_rom.size() || P.size() != P_rom.size() || Index(U.size()) != Index(Mv.rows()) ||
      Index(P.size()) != Index(Mp.rows()))
    throw Error("error metrics: DOF counts do not match");
  const double nu = m_norm(Mv, U), np = m_norm(Mp, P);
  if (nu == 0.0) throw Error("error metrics: full-order velocity has zero norm");
  if (np == 0.0) throw Error("error metrics: full-order pressure has zero norm");
  return {m_norm(Mv, U - U_rom) / nu, m_norm(Mp, P - P_rom) / np};
}

}  // namespace dgrom
