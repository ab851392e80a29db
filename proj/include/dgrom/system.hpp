#pragma once

#include "dgrom/common.hpp"

namespace dgrom {

/// Blocks of the saddle system [A B; B^T 0][U; P] = [F1; F2].
struct StokesSystem {
  SpMat A, B;
  Vector F1, F2;

  Index n_u() const { return static_cast<Index>(A.rows()); }
  Index n_p() const { return static_cast<Index>(B.cols()); }

  SpMat saddle_matrix() const {
    const Eigen::Index nu = A.rows(), np = B.cols();
    Triplets t;
    t.reserve(A.nonZeros() + 2 * B.nonZeros());
    for (Eigen::Index k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it) {
        t.emplace_back(it.row(), nu + it.col(), it.value());
        t.emplace_back(nu + it.col(), it.row(), it.value());
      }
    return from_triplets(nu + np, nu + np, t);
  }

  Vector rhs() const {
    Vector r(F1.size() + F2.size());
    r << F1, F2;
    return r;
  }
};

}  // namespace dgrom
