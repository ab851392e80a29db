#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "dgrom/common.hpp"
#include "dgrom/mesh.hpp"

namespace dgrom {

/// Nodal Lagrange basis of total degree D on the reference triangle (0,0),(1,0),(0,1).
/// Nodes are the equispaced lattice points (i/D, j/D), i+j <= D, ordered row by row in j.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree) : degree_(degree) {
    if (degree < 1) throw Error("Lagrange basis degree must be at least 1");
    for (int j = 0; j <= degree; ++j)
      for (int i = 0; i + j <= degree; ++i) nodes_.emplace_back(double(i) / degree, double(j) / degree);
    for (int total = 0; total <= degree; ++total)
      for (int q = 0; q <= total; ++q) exponents_.emplace_back(total - q, q);
    const Index m = nodes_.size();
    Matrix V(m, m);
    for (Index r = 0; r < m; ++r) V.row(r) = monomials(nodes_[r]).transpose();
    coeff_ = V.fullPivLu().inverse();
  }

  int degree() const { return degree_; }
  Index size() const { return nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  Vector values(const Vec2& xi) const { return coeff_.transpose() * monomials(xi); }

  /// Reference gradients, one row per basis function.
  Eigen::Matrix<double, Eigen::Dynamic, 2> gradients(const Vec2& xi) const {
    const Index m = size();
    Matrix dm(m, 2);
    for (Index k = 0; k < m; ++k) {
      const auto [p, q] = exponents_[k];
      dm(k, 0) = p > 0 ? p * ipow(xi.x(), p - 1) * ipow(xi.y(), q) : 0.0;
      dm(k, 1) = q > 0 ? q * ipow(xi.x(), p) * ipow(xi.y(), q - 1) : 0.0;
    }
    return coeff_.transpose() * dm;
  }

 private:
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }
  Vector monomials(const Vec2& xi) const {
    Vector v(exponents_.size());
    for (Index k = 0; k < exponents_.size(); ++k)
      v[k] = ipow(xi.x(), exponents_[k].first) * ipow(xi.y(), exponents_[k].second);
    return v;
  }

  int degree_;
  std::vector<Vec2> nodes_;
  std::vector<std::pair<int, int>> exponents_;
  Matrix coeff_;  // coeff_(monomial, basis function)
};

inline Index lagrange_size(int degree) { return Index(degree + 1) * Index(degree + 2) / 2; }

/// Fully discontinuous numbering: per element, the x-velocity block, the y-velocity block, then
/// (in a separate vector) the pressure block.
struct DofMap {
  Index n_elements = 0;
  int degree = 2;
  Index m_velocity = 0;
  Index m_pressure = 0;

  Index n_u() const { return 2 * m_velocity * n_elements; }
  Index n_p() const { return m_pressure * n_elements; }
  Index velocity(Index e, int comp, Index i) const { return (2 * e + comp) * m_velocity + i; }
  Index pressure(Index e, Index i) const { return e * m_pressure + i; }
  bool operator==(const DofMap&) const = default;
};

inline DofMap build_dofmap(Index n_elements, int degree) {
  if (degree < 2) throw Error("velocity degree must be at least 2");
  return {n_elements, degree, lagrange_size(degree), lagrange_size(degree - 1)};
}

inline DofMap build_dofmap(const Mesh& mesh, int degree) { return build_dofmap(mesh.n_elements(), degree); }

/// Affine element map x = x0 + J xi.
struct ElementMap {
  Vec2 x0;
  Mat2 J;
  double det = 0.0;
  Mat2 Jinv;
  Mat2 JinvT;

  explicit ElementMap(const std::array<Vec2, 3>& v) : x0(v[0]) {
    J.col(0) = v[1] - v[0];
    J.col(1) = v[2] - v[0];
    det = J.determinant();
    Jinv = J.inverse();
    JinvT = Jinv.transpose();
  }
  Vec2 to_physical(const Vec2& xi) const { return x0 + J * xi; }
  Vec2 to_reference(const Vec2& x) const { return Jinv * (x - x0); }
};

/// Index of the first element containing x (so interface points resolve to the plus side).
inline Index locate(const Mesh& mesh, const Vec2& x) {
  for (Index e = 0; e < mesh.n_elements(); ++e)
    if (inside(mesh.element_vertices(e), x)) return e;
  throw Error("point lies outside the mesh");
}

/// Point evaluation of broken velocity and pressure fields.
class FieldEvaluator {
 public:
  FieldEvaluator(const Mesh& mesh, const DofMap& dofs)
      : mesh_(mesh), dofs_(dofs), velocity_(dofs.degree), pressure_(dofs.degree - 1) {}

  Vec2 velocity(const Vector& U, const Vec2& x) const {
    if (static_cast<Index>(U.size()) != dofs_.n_u()) throw Error("velocity vector size mismatch");
    const Index e = locate(mesh_, x);
    const Vector phi = velocity_.values(ElementMap(mesh_.element_vertices(e)).to_reference(x));
    Vec2 u = Vec2::Zero();
    for (Index i = 0; i < velocity_.size(); ++i)
      for (int c = 0; c < 2; ++c) u[c] += phi[i] * U[dofs_.velocity(e, c, i)];
    return u;
  }

  double pressure(const Vector& P, const Vec2& x) const {
    if (static_cast<Index>(P.size()) != dofs_.n_p()) throw Error("pressure vector size mismatch");
    const Index e = locate(mesh_, x);
    const Vector psi = pressure_.values(ElementMap(mesh_.element_vertices(e)).to_reference(x));
    double p = 0.0;
    for (Index i = 0; i < pressure_.size(); ++i) p += psi[i] * P[dofs_.pressure(e, i)];
    return p;
  }

 private:
  const Mesh& mesh_;
  DofMap dofs_;
  LagrangeBasis velocity_;
  LagrangeBasis pressure_;
};

inline Vec2 evaluate_velocity(const Vector& U, const Mesh& mesh, const DofMap& dofs, const Vec2& x) {
  return FieldEvaluator(mesh, dofs).velocity(U, x);
}

inline double evaluate_pressure(const Vector& P, const Mesh& mesh, const DofMap& dofs, const Vec2& x) {
  return FieldEvaluator(mesh, dofs).pressure(P, x);
}

/// Nodal interpolant of a velocity field into the broken space.
inline Vector interpolate_velocity(const std::function<Vec2(const Vec2&)>& f, const Mesh& mesh,
                                   const DofMap& dofs) {
  const LagrangeBasis b(dofs.degree);
  Vector U(dofs.n_u());
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const ElementMap em(mesh.element_vertices(e));
    for (Index i = 0; i < b.size(); ++i) {
      const Vec2 u = f(em.to_physical(b.nodes()[i]));
      U[dofs.velocity(e, 0, i)] = u.x();
      U[dofs.velocity(e, 1, i)] = u.y();
    }
  }
  return U;
}

inline Vector interpolate_pressure(const std::function<double(const Vec2&)>& f, const Mesh& mesh,
                                   const DofMap& dofs) {
  const LagrangeBasis b(dofs.degree - 1);
  Vector P(dofs.n_p());
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const ElementMap em(mesh.element_vertices(e));
    for (Index i = 0; i < b.size(); ++i) P[dofs.pressure(e, i)] = f(em.to_physical(b.nodes()[i]));
  }
  return P;
}

}  // namespace dgrom
