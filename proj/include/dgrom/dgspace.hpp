#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "dgspace is an offline module and must not be included in an online-only build"
#endif

#include <array>

#include "dgrom/common.hpp"
#include "dgrom/lagrange.hpp"
#include "dgrom/quadrature.hpp"

namespace dgrom {

inline const std::array<Vec2, 3>& reference_vertices() {
  static const std::array<Vec2, 3> v = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  return v;
}

/// Point at parameter t along local edge k of the reference triangle; `reversed` runs it backwards.
inline Vec2 reference_edge_point(int k, double t, bool reversed) {
  const auto& v = reference_vertices();
  if (reversed) t = 1.0 - t;
  return (1.0 - t) * v[k] + t * v[(k + 1) % 3];
}

/// Basis values and reference gradients tabulated at volume and edge quadrature points.
struct BasisSet {
  int degree = 0;
  Index m = 0;
  QuadratureRule volume;
  LineRule edge;
  Matrix values, grad_x, grad_y;  // (quadrature point, basis function)
  // [local edge][reversed] -> (edge quadrature point, basis function)
  std::array<std::array<Matrix, 2>, 3> edge_values, edge_grad_x, edge_grad_y;
};

/// Tabulates the degree-D Lagrange basis. `quadrature_degree` defaults to 2D so that every
/// bilinear form on affine elements is integrated exactly.
inline BasisSet reference_basis(int degree, int quadrature_degree = -1) {
  if (degree < 1) throw Error("basis degree must be at least 1");
  if (quadrature_degree < 0) quadrature_degree = 2 * degree;
  const LagrangeBasis lb(degree);
  BasisSet b;
  b.degree = degree;
  b.m = lb.size();
  b.volume = triangle_rule(quadrature_degree);
  b.edge = edge_rule(quadrature_degree);

  auto tabulate = [&](const std::vector<Vec2>& pts, Matrix& v, Matrix& gx, Matrix& gy) {
    v.resize(pts.size(), b.m);
    gx.resize(pts.size(), b.m);
    gy.resize(pts.size(), b.m);
    for (Index q = 0; q < pts.size(); ++q) {
      v.row(q) = lb.values(pts[q]).transpose();
      const auto g = lb.gradients(pts[q]);
      gx.row(q) = g.col(0).transpose();
      gy.row(q) = g.col(1).transpose();
    }
  };
  tabulate(b.volume.points, b.values, b.grad_x, b.grad_y);
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 2; ++r) {
      std::vector<Vec2> pts;
      for (double t : b.edge.points) pts.push_back(reference_edge_point(k, t, r == 1));
      tabulate(pts, b.edge_values[k][r], b.edge_grad_x[k][r], b.edge_grad_y[k][r]);
    }
  return b;
}

/// Velocity (degree D) and pressure (degree D-1) tables sharing one set of quadrature points.
struct DGSpace {
  DofMap dofs;
  BasisSet velocity;
  BasisSet pressure;
};

inline DGSpace build_space(const Mesh& mesh, int degree) {
  DGSpace s;
  s.dofs = build_dofmap(mesh, degree);
  s.velocity = reference_basis(degree, 2 * degree);
  s.pressure = reference_basis(degree - 1, 2 * degree);
  return s;
}

}  // namespace dgrom
