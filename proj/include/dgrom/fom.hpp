#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "fom is an offline module and must not be included in an online-only build"
#endif

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "dgrom/common.hpp"
#include "dgrom/dgspace.hpp"
#include "dgrom/mesh.hpp"
#include "dgrom/physics.hpp"
#include "dgrom/system.hpp"

namespace dgrom {

/// Every weak-form contribution assembled separately, so each can be compared on its own.
struct StokesTerms {
  SpMat viscous;        // (grad u, grad phi), optionally scaled by nu
  SpMat consistency;    // -nu({grad u},[n x phi]) - nu([n x u],{grad phi}) on interior + Dirichlet
  SpMat penalty;        // C11([u],[phi]) on interior + Dirichlet
  SpMat divergence;     // -(psi, div phi)
  SpMat pressure_jump;  // ({psi},[n . phi]) on interior + Dirichlet
  Vector f1_source, f1_neumann, f1_penalty, f1_symmetry;
  Vector f2;

  StokesSystem system() const {
    return {viscous + consistency + penalty, divergence + pressure_jump,
            f1_source + f1_neumann + f1_penalty + f1_symmetry, f2};
  }
};

struct InnerProducts {
  SpMat velocity;  // L2 + broken H1 seminorm
  SpMat pressure;  // L2
};

namespace detail {

/// One side of a facet, tabulated at the edge quadrature points with physical gradients.
struct FacetSide {
  Index element = 0;
  Matrix phi, gx, gy;  // velocity basis
  Matrix psi;          // pressure basis
};

struct FacetQuadrature {
  std::array<FacetSide, 2> sides;
  int n_sides = 1;
  int edge = 0;  // local edge of sides[0]
  bool dirichlet = false;  // boundary facet with Dirichlet data
  bool neumann = false;
  BoundaryTag tag = BoundaryTag::wall;
  Vec2 normal;                // plus-side outward normal
  std::vector<Vec2> points;   // physical quadrature points
  std::vector<double> weights;  // including the physical edge length
};

inline FacetSide make_side(const Mesh& mesh, const DGSpace& space, Index e, int k, bool reversed) {
  FacetSide s;
  s.element = e;
  const ElementMap em(mesh.element_vertices(e));
  const int r = reversed ? 1 : 0;
  s.phi = space.velocity.edge_values[k][r];
  const Matrix& rx = space.velocity.edge_grad_x[k][r];
  const Matrix& ry = space.velocity.edge_grad_y[k][r];
  s.gx = em.JinvT(0, 0) * rx + em.JinvT(0, 1) * ry;
  s.gy = em.JinvT(1, 0) * rx + em.JinvT(1, 1) * ry;
  s.psi = space.pressure.edge_values[k][r];
  return s;
}

inline void fill_points(FacetQuadrature& f, const Mesh& mesh, const DGSpace& space, Index e, int k,
                        double length) {
  const ElementMap em(mesh.element_vertices(e));
  for (Index q = 0; q < space.velocity.edge.points.size(); ++q) {
    f.points.push_back(em.to_physical(reference_edge_point(k, space.velocity.edge.points[q], false)));
    f.weights.push_back(space.velocity.edge.weights[q] * length);
  }
}

template <typename Fn>
void for_each_facet(const Mesh& mesh, const FacetList& facets, const DGSpace& space, Fn&& fn) {
  for (const auto& fi : facets.interior) {
    FacetQuadrature f;
    f.n_sides = 2;
    f.normal = fi.normal;
    f.edge = fi.plus_edge;
    f.sides[0] = make_side(mesh, space, fi.plus, fi.plus_edge, false);
    f.sides[1] = make_side(mesh, space, fi.minus, fi.minus_edge, fi.reversed);
    fill_points(f, mesh, space, fi.plus, fi.plus_edge, fi.length);
    fn(f);
  }
  for (const auto& fb : facets.boundary) {
    FacetQuadrature f;
    f.n_sides = 1;
    f.tag = fb.tag;
    f.dirichlet = is_dirichlet(fb.tag);
    f.neumann = !f.dirichlet;
    f.normal = fb.normal;
    f.edge = fb.edge;
    f.sides[0] = make_side(mesh, space, fb.element, fb.edge, false);
    fill_points(f, mesh, space, fb.element, fb.edge, fb.length);
    fn(f);
  }
}

/// Volume loop with physical gradients.
template <typename Fn>
void for_each_element(const Mesh& mesh, const DGSpace& space, Fn&& fn) {
  const BasisSet& v = space.velocity;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const ElementMap em(mesh.element_vertices(e));
    const Matrix gx = em.JinvT(0, 0) * v.grad_x + em.JinvT(0, 1) * v.grad_y;
    const Matrix gy = em.JinvT(1, 0) * v.grad_x + em.JinvT(1, 1) * v.grad_y;
    Vector w(v.volume.size());
    for (Index q = 0; q < v.volume.size(); ++q) w[q] = v.volume.weights[q] * std::abs(em.det);
    fn(e, em, gx, gy, w);
  }
}

inline double side_sign(int r) { return r == 0 ? 1.0 : -1.0; }

}  // namespace detail

inline SpMat assemble_viscous(const Mesh& mesh, const DGSpace& space, double factor) {
  const auto& d = space.dofs;
  Triplets t;
  detail::for_each_element(mesh, space, [&](Index e, const ElementMap&, const Matrix& gx, const Matrix& gy,
                                            const Vector& w) {
    const Matrix K = factor * (gx.transpose() * w.asDiagonal() * gx + gy.transpose() * w.asDiagonal() * gy);
    for (int c = 0; c < 2; ++c)
      for (Index i = 0; i < d.m_velocity; ++i)
        for (Index j = 0; j < d.m_velocity; ++j)
          t.emplace_back(d.velocity(e, c, i), d.velocity(e, c, j), K(i, j));
  });
  return from_triplets(d.n_u(), d.n_u(), t);
}

/// Consistency term plus its adjoint (symmetry) term on the interior skeleton and Dirichlet boundary.
inline SpMat assemble_consistency(const Mesh& mesh, const FacetList& facets, const DGSpace& space, double nu) {
  const auto& d = space.dofs;
  Triplets t;
  detail::for_each_facet(mesh, facets, space, [&](const detail::FacetQuadrature& f) {
    if (f.neumann) return;
    const double avg = f.n_sides == 2 ? 0.5 : 1.0;
    const Vector w = Eigen::Map<const Vector>(f.weights.data(), f.weights.size());
    for (int s = 0; s < f.n_sides; ++s) {
      const auto& gs = f.sides[s];
      const Matrix dn = f.normal.x() * gs.gx + f.normal.y() * gs.gy;
      for (int r = 0; r < f.n_sides; ++r) {
        const auto& tr = f.sides[r];
        const Matrix C = (-nu * avg * detail::side_sign(r)) * (tr.phi.transpose() * w.asDiagonal() * dn);
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i)
            for (Index j = 0; j < d.m_velocity; ++j) {
              const Index row = d.velocity(tr.element, c, i), col = d.velocity(gs.element, c, j);
              t.emplace_back(row, col, C(i, j));
              t.emplace_back(col, row, C(i, j));
            }
      }
    }
  });
  return from_triplets(d.n_u(), d.n_u(), t);
}

inline SpMat assemble_penalty(const Mesh& mesh, const FacetList& facets, const DGSpace& space, double c11) {
  const auto& d = space.dofs;
  Triplets t;
  detail::for_each_facet(mesh, facets, space, [&](const detail::FacetQuadrature& f) {
    if (f.neumann) return;
    const Vector w = Eigen::Map<const Vector>(f.weights.data(), f.weights.size());
    for (int s = 0; s < f.n_sides; ++s)
      for (int r = 0; r < f.n_sides; ++r) {
        const Matrix P = (c11 * detail::side_sign(r) * detail::side_sign(s)) *
                         (f.sides[r].phi.transpose() * w.asDiagonal() * f.sides[s].phi);
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i)
            for (Index j = 0; j < d.m_velocity; ++j)
              t.emplace_back(d.velocity(f.sides[r].element, c, i), d.velocity(f.sides[s].element, c, j), P(i, j));
      }
  });
  return from_triplets(d.n_u(), d.n_u(), t);
}

/// a_IP: viscous volume term, consistency and symmetry terms, and the C11 penalty.
inline SpMat assemble_aip(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                          const PhysicsConfig& cfg) {
  cfg.validate();
  return assemble_viscous(mesh, space, cfg.volume_factor()) + assemble_consistency(mesh, facets, space, cfg.nu) +
         assemble_penalty(mesh, facets, space, cfg.c11);
}

inline SpMat assemble_divergence(const Mesh& mesh, const DGSpace& space) {
  const auto& d = space.dofs;
  const Matrix& psi = space.pressure.values;
  Triplets t;
  detail::for_each_element(mesh, space, [&](Index e, const ElementMap&, const Matrix& gx, const Matrix& gy,
                                            const Vector& w) {
    const std::array<Matrix, 2> D = {-(gx.transpose() * w.asDiagonal() * psi), -(gy.transpose() * w.asDiagonal() * psi)};
    for (int c = 0; c < 2; ++c)
      for (Index i = 0; i < d.m_velocity; ++i)
        for (Index j = 0; j < d.m_pressure; ++j) t.emplace_back(d.velocity(e, c, i), d.pressure(e, j), D[c](i, j));
  });
  return from_triplets(d.n_u(), d.n_p(), t);
}

inline SpMat assemble_pressure_jump(const Mesh& mesh, const FacetList& facets, const DGSpace& space) {
  const auto& d = space.dofs;
  Triplets t;
  detail::for_each_facet(mesh, facets, space, [&](const detail::FacetQuadrature& f) {
    if (f.neumann) return;
    const double avg = f.n_sides == 2 ? 0.5 : 1.0;
    const Vector w = Eigen::Map<const Vector>(f.weights.data(), f.weights.size());
    for (int s = 0; s < f.n_sides; ++s)
      for (int r = 0; r < f.n_sides; ++r) {
        const Matrix J = (avg * detail::side_sign(r)) * (f.sides[r].phi.transpose() * w.asDiagonal() * f.sides[s].psi);
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i)
            for (Index j = 0; j < d.m_pressure; ++j)
              t.emplace_back(d.velocity(f.sides[r].element, c, i), d.pressure(f.sides[s].element, j),
                             f.normal[c] * J(i, j));
      }
  });
  return from_triplets(d.n_u(), d.n_p(), t);
}

/// B = -(psi, div phi) + ({psi}, [n . phi]) over the interior skeleton and Dirichlet boundary.
inline SpMat assemble_b(const Mesh& mesh, const FacetList& facets, const DGSpace& space) {
  return assemble_divergence(mesh, space) + assemble_pressure_jump(mesh, facets, space);
}

namespace detail {

struct RhsParts {
  Vector source, neumann, penalty, symmetry, f2;
};

inline RhsParts assemble_rhs_parts(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                                   const PhysicsConfig& cfg) {
  const auto& d = space.dofs;
  RhsParts r{Vector::Zero(d.n_u()), Vector::Zero(d.n_u()), Vector::Zero(d.n_u()), Vector::Zero(d.n_u()),
             Vector::Zero(d.n_p())};
  const Matrix& phi = space.velocity.values;
  if (cfg.source.squaredNorm() > 0.0) {
    detail::for_each_element(mesh, space, [&](Index e, const ElementMap&, const Matrix&, const Matrix&,
                                              const Vector& w) {
      const Vector integral = phi.transpose() * w;
      for (int c = 0; c < 2; ++c)
        for (Index i = 0; i < d.m_velocity; ++i) r.source[d.velocity(e, c, i)] += cfg.source[c] * integral[i];
    });
  }
  detail::for_each_facet(mesh, facets, space, [&](const detail::FacetQuadrature& f) {
    if (f.n_sides == 2) return;
    const auto& s = f.sides[0];
    const Index e = s.element;
    for (Index q = 0; q < f.points.size(); ++q) {
      const double w = f.weights[q];
      if (f.neumann) {
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i) r.neumann[d.velocity(e, c, i)] += w * cfg.traction[c] * s.phi(q, i);
        continue;
      }
      const Vec2 ud = cfg.dirichlet(f.points[q], f.tag);
      for (int c = 0; c < 2; ++c)
        for (Index i = 0; i < d.m_velocity; ++i) {
          const double dn = s.gx(q, i) * f.normal.x() + s.gy(q, i) * f.normal.y();
          r.penalty[d.velocity(e, c, i)] += w * cfg.c11 * ud[c] * s.phi(q, i);
          r.symmetry[d.velocity(e, c, i)] -= w * cfg.nu * ud[c] * dn;
        }
      const double un = ud.dot(f.normal);
      for (Index j = 0; j < d.m_pressure; ++j) r.f2[d.pressure(e, j)] += w * un * s.psi(q, j);
    }
  });
  return r;
}

}  // namespace detail

/// F1 (source, Neumann, penalty lift, symmetry lift) and F2 (continuity lift).
inline std::pair<Vector, Vector> assemble_rhs(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                                              const PhysicsConfig& cfg) {
  cfg.validate();
  auto p = detail::assemble_rhs_parts(mesh, facets, space, cfg);
  return {p.source + p.neumann + p.penalty + p.symmetry, p.f2};
}

inline StokesTerms assemble_terms(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                                  const PhysicsConfig& cfg) {
  cfg.validate();
  StokesTerms t;
  t.viscous = assemble_viscous(mesh, space, cfg.volume_factor());
  t.consistency = assemble_consistency(mesh, facets, space, cfg.nu);
  t.penalty = assemble_penalty(mesh, facets, space, cfg.c11);
  t.divergence = assemble_divergence(mesh, space);
  t.pressure_jump = assemble_pressure_jump(mesh, facets, space);
  auto r = detail::assemble_rhs_parts(mesh, facets, space, cfg);
  t.f1_source = std::move(r.source);
  t.f1_neumann = std::move(r.neumann);
  t.f1_penalty = std::move(r.penalty);
  t.f1_symmetry = std::move(r.symmetry);
  t.f2 = std::move(r.f2);
  return t;
}

inline StokesSystem assemble_system(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                                    const PhysicsConfig& cfg) {
  return assemble_terms(mesh, facets, space, cfg).system();
}

inline InnerProducts assemble_inner_products(const Mesh& mesh, const DGSpace& space) {
  const auto& d = space.dofs;
  const Matrix& phi = space.velocity.values;
  const Matrix& psi = space.pressure.values;
  Triplets tv, tp;
  detail::for_each_element(mesh, space, [&](Index e, const ElementMap&, const Matrix& gx, const Matrix& gy,
                                            const Vector& w) {
    const Matrix Mv = phi.transpose() * w.asDiagonal() * phi + gx.transpose() * w.asDiagonal() * gx +
                      gy.transpose() * w.asDiagonal() * gy;
    const Matrix Mp = psi.transpose() * w.asDiagonal() * psi;
    for (int c = 0; c < 2; ++c)
      for (Index i = 0; i < d.m_velocity; ++i)
        for (Index j = 0; j < d.m_velocity; ++j) tv.emplace_back(d.velocity(e, c, i), d.velocity(e, c, j), Mv(i, j));
    for (Index i = 0; i < d.m_pressure; ++i)
      for (Index j = 0; j < d.m_pressure; ++j) tp.emplace_back(d.pressure(e, i), d.pressure(e, j), Mp(i, j));
  });
  return {from_triplets(d.n_u(), d.n_u(), tv), from_triplets(d.n_p(), d.n_p(), tp)};
}

struct StokesSolution {
  Vector U, P;
  double residual = 0.0;  // ||K x - rhs|| / ||rhs||
};

/// Sparse LU with partial pivoting on the full saddle matrix, plus up to three refinement steps.
inline StokesSolution solve_stokes(const StokesSystem& sys) {
  const Index nu = sys.n_u(), np = sys.n_p();
  if (static_cast<Index>(sys.F1.size()) != nu || static_cast<Index>(sys.F2.size()) != np)
    throw Error("right-hand side size mismatch");
  const Vector rhs = sys.rhs();
  StokesSolution sol;
  const double rn = rhs.norm();
  if (rn == 0.0) {
    sol.U = Vector::Zero(nu);
    sol.P = Vector::Zero(np);
    return sol;
  }
  const SpMat K = sys.saddle_matrix();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success)
    throw Error("saddle-point factorization failed (" + lu.lastErrorMessage() +
                "); probable cause: C11 too small or no Neumann boundary to fix the pressure");
  Vector x = lu.solve(rhs);
  Vector res = rhs - K * x;
  for (int it = 0; it < 3 && res.norm() > 1e-12 * rn; ++it) {
    x += lu.solve(res);
    res = rhs - K * x;
  }
  sol.residual = res.norm() / rn;
  if (!x.allFinite() || sol.residual > 1e-10)
    throw Error("saddle-point solve inaccurate (relative residual " + std::to_string(sol.residual) +
                "); probable cause: C11 too small or no Neumann boundary to fix the pressure");
  sol.U = x.head(nu);
  sol.P = x.tail(np);
  return sol;
}

}  // namespace dgrom
