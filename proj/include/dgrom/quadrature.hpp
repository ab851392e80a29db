#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "quadrature is an offline module and must not be included in an online-only build"
#endif

#include <atomic>
#include <cmath>
#include <numbers>
#include <vector>

#include "dgrom/common.hpp"

namespace dgrom {

/// Number of quadrature rules built so far. Lets tests assert that a code path does no quadrature.
inline std::atomic<std::size_t>& quadrature_calls() {
  static std::atomic<std::size_t> n{0};
  return n;
}

/// Points and weights on [0,1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Points and weights on the reference triangle (0,0),(1,0),(0,1).
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;
  Index size() const { return points.size(); }
};

/// n-point Gauss-Legendre rule mapped to [0,1]; exact to degree 2n-1.
inline LineRule gauss_legendre(int n) {
  if (n < 1) throw Error("Gauss-Legendre rule needs at least one point");
  ++quadrature_calls();
  LineRule r;
  r.degree = 2 * n - 1;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.points[n - 1 - i] = 0.5 * (x + 1.0);
    r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle, exact to `degree`.
inline QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw Error("negative quadrature degree");
  ++quadrature_calls();
  const int n = (degree + 3) / 2;  // integrand in the collapsed variable has degree + 1
  const LineRule g = gauss_legendre(n);
  QuadratureRule r;
  r.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      r.points.emplace_back(u, v * (1.0 - u));
      r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  return r;
}

/// Gauss rule on [0,1] exact to `degree`.
inline LineRule edge_rule(int degree) { return gauss_legendre(std::max(1, (degree + 2) / 2)); }

}  // namespace dgrom
