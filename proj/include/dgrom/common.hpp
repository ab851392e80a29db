#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dgrom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Triplets = std::vector<Triplet>;
using Index = std::size_t;

/// Raised for every violated precondition or failed numerical step.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range user input (config, parameter, flag).
class InputError : public Error {
 public:
  using Error::Error;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross(b - a, c - a);
}

/// Outward unit normal of the edge a->b of a counter-clockwise polygon.
inline Vec2 outward_normal(const Vec2& a, const Vec2& b) {
  const Vec2 t = b - a;
  return Vec2(t.y(), -t.x()).normalized();
}

inline SpMat from_triplets(Index rows, Index cols, const Triplets& t) {
  SpMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

/// Frobenius norm of (a - b) over the Frobenius norm of b; absolute when b vanishes.
inline double relative_difference(const SpMat& a, const SpMat& b) {
  const double nb = b.norm();
  const double d = SpMat(a - b).norm();
  return nb > 0.0 ? d / nb : d;
}

inline double relative_difference(const Vector& a, const Vector& b) {
  const double nb = b.norm();
  const double d = (a - b).norm();
  return nb > 0.0 ? d / nb : d;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  void restart() { start_ = std::chrono::steady_clock::now(); }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace dgrom
