#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "affine decomposition is an offline module and must not be included in an online-only build"
#endif

#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "dgrom/affine_operator.hpp"
#include "dgrom/fom.hpp"
#include "dgrom/geometry.hpp"
#include "dgrom/mesh.hpp"

namespace dgrom {

namespace detail {

class TermCollector {
 public:
  TermCollector(Index n_u, Index n_p) : n_u_(n_u), n_p_(n_p) {}

  Triplets& matrix(Term t, const ThetaRecipe& r) {
    auto [it, fresh] = matrices_.try_emplace(std::tuple_cat(std::make_tuple(t), r.key()));
    if (fresh) it->second.first = r;
    return it->second.second;
  }

  Vector& vector(Term t, const ThetaRecipe& r) {
    auto [it, fresh] = vectors_.try_emplace(std::tuple_cat(std::make_tuple(t), r.key()));
    if (fresh) {
      it->second.first = r;
      it->second.second = Vector::Zero(Eigen::Index(target_of(t) == Target::F2 ? n_p_ : n_u_));
    }
    return it->second.second;
  }

  std::vector<AffineTerm> finish() {
    std::vector<AffineTerm> out;
    for (auto& [key, entry] : matrices_) {
      AffineTerm t;
      t.term = std::get<0>(key);
      t.theta = entry.first;
      t.block = from_triplets(n_u_, target_of(t.term) == Target::A ? n_u_ : n_p_, entry.second);
      if (t.block.norm() > 0.0) out.push_back(std::move(t));
    }
    for (auto& [key, entry] : vectors_) {
      if (!(entry.second.norm() > 0.0)) continue;
      AffineTerm t;
      t.term = std::get<0>(key);
      t.theta = entry.first;
      t.vector = std::move(entry.second);
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  using Key = std::tuple<Term, ThetaKind, std::uint32_t, std::uint32_t, std::uint8_t, std::uint8_t>;
  Index n_u_, n_p_;
  std::map<Key, std::pair<ThetaRecipe, Triplets>> matrices_;
  std::map<Key, std::pair<ThetaRecipe, Vector>> vectors_;
};

inline std::pair<Index, Index> subdomain_edge_vertices(const DomainDescription& domain, Index sub, int edge) {
  const auto& t = domain.subdomains.at(sub);
  return std::minmax(t[edge], t[(edge + 1) % 3]);
}

}  // namespace detail

/// Splits every weak-form term into parameter-independent blocks assembled on the reference
/// mesh, each paired with a closed-form theta recipe in the subdomain Jacobians.
///
/// Volume terms transform with the owning subdomain's map. Facet terms are first split into
/// one-sided products (gradient side s, trace side r); each product transforms with
/// G_s^-1 (gradient) and |det G_r| G_r^-T n (scaled normal of the trace side), so facets on a
/// subdomain interface carry a two-map recipe. The C11 penalty is kept on the reference
/// domain with theta = 1 (alpha when `alpha_scaling` is set).
inline AffineOperator decompose(const Mesh& mesh, const FacetList& facets, const DGSpace& space,
                                const PhysicsConfig& cfg, const DomainDescription& domain,
                                bool alpha_scaling = false) {
  cfg.validate();
  const DofMap& d = space.dofs;
  if (d.n_elements != mesh.n_elements()) throw Error("dof map does not match mesh");
  detail::TermCollector col(d.n_u(), d.n_p());

  for (const auto& fi : facets.interior) {
    const Index sp = mesh.subdomain[fi.plus], sm = mesh.subdomain[fi.minus];
    if (sp == sm) continue;
    const int ep = mesh.subdomain_edge[fi.plus][fi.plus_edge];
    const int em = mesh.subdomain_edge[fi.minus][fi.minus_edge];
    if (ep < 0 || em < 0 ||
        detail::subdomain_edge_vertices(domain, sp, ep) != detail::subdomain_edge_vertices(domain, sm, em))
      throw Error("facet between subdomains " + std::to_string(sp) + " and " + std::to_string(sm) +
                  " does not lie on a shared subdomain edge");
  }

  const double vfac = cfg.volume_factor();
  detail::for_each_element(mesh, space, [&](Index e, const ElementMap&, const Matrix& gx, const Matrix& gy,
                                            const Vector& w) {
    const Index sub = mesh.subdomain[e];
    const std::array<const Matrix*, 2> g = {&gx, &gy};
    const Matrix& psi = space.pressure.values;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Matrix K = vfac * (g[b]->transpose() * w.asDiagonal() * *g[a]);
        Triplets& t = col.matrix(Term::viscous, ThetaRecipe::cross(sub, sub, a, b));
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i)
            for (Index j = 0; j < d.m_velocity; ++j) t.emplace_back(d.velocity(e, c, i), d.velocity(e, c, j), K(i, j));
      }
    for (int a = 0; a < 2; ++a) {
      const Matrix D = -(g[a]->transpose() * w.asDiagonal() * psi);
      for (int c = 0; c < 2; ++c) {
        Triplets& t = col.matrix(Term::divergence, ThetaRecipe::inverse(sub, a, c));
        for (Index i = 0; i < d.m_velocity; ++i)
          for (Index j = 0; j < d.m_pressure; ++j) t.emplace_back(d.velocity(e, c, i), d.pressure(e, j), D(i, j));
      }
    }
    if (cfg.source.squaredNorm() > 0.0) {
      const Vector integral = space.velocity.values.transpose() * w;
      Vector& v = col.vector(Term::f1_source, ThetaRecipe::volume(sub));
      for (int c = 0; c < 2; ++c)
        for (Index i = 0; i < d.m_velocity; ++i) v[d.velocity(e, c, i)] += cfg.source[c] * integral[i];
    }
  });

  detail::for_each_facet(mesh, facets, space, [&](const detail::FacetQuadrature& f) {
    const Vector w = Eigen::Map<const Vector>(f.weights.data(), f.weights.size());
    if (f.neumann) {
      if (cfg.traction.squaredNorm() == 0.0) return;
      const auto& side = f.sides[0];
      const Index sub = mesh.subdomain[side.element];
      const int edge = mesh.subdomain_edge[side.element][f.edge];
      if (edge < 0) throw Error("Neumann facet not on a subdomain edge");
      const auto& tri = domain.subdomains[sub];
      const Vec2 t = domain.vertices[tri[(edge + 1) % 3]] - domain.vertices[tri[edge]];
      const Vector integral = side.phi.transpose() * w;
      Vector& v = col.vector(Term::f1_neumann, ThetaRecipe::stretch(sub, edge, t));
      for (int c = 0; c < 2; ++c)
        for (Index i = 0; i < d.m_velocity; ++i) v[d.velocity(side.element, c, i)] += cfg.traction[c] * integral[i];
      return;
    }

    const double avg = f.n_sides == 2 ? 0.5 : 1.0;
    for (int s = 0; s < f.n_sides; ++s) {
      const auto& gs = f.sides[s];
      const Index sub_s = mesh.subdomain[gs.element];
      const std::array<const Matrix*, 2> g = {&gs.gx, &gs.gy};
      for (int r = 0; r < f.n_sides; ++r) {
        const auto& tr = f.sides[r];
        const Index sub_r = mesh.subdomain[tr.element];
        const Vec2 nr = detail::side_sign(r) * f.normal;
        for (int a = 0; a < 2; ++a) {
          const Matrix base = tr.phi.transpose() * w.asDiagonal() * *g[a];
          for (int b = 0; b < 2; ++b) {
            if (nr[b] == 0.0) continue;
            const Matrix C = (-cfg.nu * avg * nr[b]) * base;
            Triplets& t = col.matrix(Term::consistency, ThetaRecipe::cross(sub_s, sub_r, a, b));
            for (int c = 0; c < 2; ++c)
              for (Index i = 0; i < d.m_velocity; ++i)
                for (Index j = 0; j < d.m_velocity; ++j) {
                  const Index row = d.velocity(tr.element, c, i), cl = d.velocity(gs.element, c, j);
                  t.emplace_back(row, cl, C(i, j));
                  t.emplace_back(cl, row, C(i, j));
                }
          }
        }
        const Matrix P = (cfg.c11 * detail::side_sign(r) * detail::side_sign(s)) * (tr.phi.transpose() * w.asDiagonal() * gs.phi);
        Triplets& tp = col.matrix(Term::penalty, ThetaRecipe::penalty());
        for (int c = 0; c < 2; ++c)
          for (Index i = 0; i < d.m_velocity; ++i)
            for (Index j = 0; j < d.m_velocity; ++j)
              tp.emplace_back(d.velocity(tr.element, c, i), d.velocity(gs.element, c, j), P(i, j));

        const Matrix J = avg * (tr.phi.transpose() * w.asDiagonal() * gs.psi);
        for (int b = 0; b < 2; ++b) {
          if (nr[b] == 0.0) continue;
          for (int c = 0; c < 2; ++c) {
            Triplets& t = col.matrix(Term::pressure_jump, ThetaRecipe::inverse(sub_r, b, c));
            for (Index i = 0; i < d.m_velocity; ++i)
              for (Index j = 0; j < d.m_pressure; ++j)
                t.emplace_back(d.velocity(tr.element, c, i), d.pressure(gs.element, j), nr[b] * J(i, j));
          }
        }
      }
    }

    if (f.n_sides == 2) return;
    // Dirichlet lifts. Data must live on edges the parameter does not move.
    const auto& side = f.sides[0];
    const Index e = side.element;
    const Index sub = mesh.subdomain[e];
    std::vector<Vec2> ud;
    bool any = false;
    for (const auto& x : f.points) {
      ud.push_back(cfg.dirichlet(x, f.tag));
      any = any || ud.back().squaredNorm() > 0.0;
    }
    if (!any) return;
    const int edge = mesh.subdomain_edge[e][f.edge];
    if (edge < 0) throw Error("Dirichlet facet not on a subdomain edge");
    const auto [va, vb] = detail::subdomain_edge_vertices(domain, sub, edge);
    if (!domain.is_fixed(va) || !domain.is_fixed(vb))
      throw Error("nonzero Dirichlet data on a parameter-dependent boundary edge has no affine expansion");
    Vector& vp = col.vector(Term::f1_penalty, ThetaRecipe::penalty());
    const std::array<const Matrix*, 2> g = {&side.gx, &side.gy};
    for (Index q = 0; q < f.points.size(); ++q) {
      for (int c = 0; c < 2; ++c) {
        if (ud[q][c] == 0.0) continue;
        for (Index i = 0; i < d.m_velocity; ++i) vp[d.velocity(e, c, i)] += w[q] * cfg.c11 * ud[q][c] * side.phi(q, i);
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            if (f.normal[b] == 0.0) continue;
            Vector& vs = col.vector(Term::f1_symmetry, ThetaRecipe::cross(sub, sub, a, b));
            for (Index i = 0; i < d.m_velocity; ++i)
              vs[d.velocity(e, c, i)] -= w[q] * cfg.nu * ud[q][c] * (*g[a])(q, i) * f.normal[b];
          }
        for (int b = 0; b < 2; ++b) {
          if (f.normal[b] == 0.0) continue;
          Vector& v2 = col.vector(Term::f2, ThetaRecipe::inverse(sub, b, c));
          for (Index j = 0; j < d.m_pressure; ++j) v2[d.pressure(e, j)] += w[q] * ud[q][c] * f.normal[b] * side.psi(q, j);
        }
      }
    }
  });

  return AffineOperator(d.n_u(), d.n_p(), alpha_scaling, col.finish());
}

/// Result of comparing one term of the expansion against an independent assembly.
struct TermCheck {
  Term term = Term::viscous;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return error <= tolerance; }
};

/// Compares sum_i theta_i(mu) block_i with direct quadrature assembly on the deformed mesh, term by
/// term. Penalty terms are compared with their reference-domain assembly instead.
inline std::vector<TermCheck> check_affine_against_direct(const AffineOperator& op, const DomainDescription& domain,
                                                          const Mesh& reference_mesh, const DGSpace& space,
                                                          const PhysicsConfig& cfg, const ParameterTuple& mu,
                                                          double transformed_tol = 1e-10, double penalty_tol = 1e-13) {
  const MapSet ms = build_maps(domain, mu);
  const ThetaVector theta = op.evaluate_theta(ms);
  const Mesh deformed = deform_mesh(reference_mesh, ms);
  const StokesTerms direct = assemble_terms(deformed, build_facets(deformed), space, cfg);
  const FacetList ref_facets = build_facets(reference_mesh);
  const double scale = op.alpha_scaling() ? ms.alpha : 1.0;
  const SpMat ref_penalty = scale * assemble_penalty(reference_mesh, ref_facets, space, cfg.c11);
  const Vector ref_lift = scale * detail::assemble_rhs_parts(reference_mesh, ref_facets, space, cfg).penalty;

  std::vector<TermCheck> out;
  auto mat = [&](Term t, const SpMat& expected, double tol) {
    out.push_back({t, relative_difference(op.assemble_matrix(t, theta), expected), tol});
  };
  auto vec = [&](Term t, const Vector& expected, double tol) {
    out.push_back({t, relative_difference(op.assemble_vector(t, theta), expected), tol});
  };
  mat(Term::viscous, direct.viscous, transformed_tol);
  mat(Term::consistency, direct.consistency, transformed_tol);
  mat(Term::divergence, direct.divergence, transformed_tol);
  mat(Term::pressure_jump, direct.pressure_jump, transformed_tol);
  vec(Term::f1_source, direct.f1_source, transformed_tol);
  vec(Term::f1_neumann, direct.f1_neumann, transformed_tol);
  vec(Term::f1_symmetry, direct.f1_symmetry, transformed_tol);
  vec(Term::f2, direct.f2, transformed_tol);
  mat(Term::penalty, ref_penalty, penalty_tol);
  vec(Term::f1_penalty, ref_lift, penalty_tol);
  return out;
}

}  // namespace dgrom
