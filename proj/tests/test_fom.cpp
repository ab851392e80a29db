#include <gtest/gtest.h>

#include <random>

#include "dgrom/dgspace.hpp"
#include "dgrom/fom.hpp"

using namespace dgrom;

namespace {

// Closed-form quadratic and linear Lagrange bases in barycentric coordinates of a physical
// triangle, node order (0,0),(1/2,0),(1,0),(0,1/2),(1/2,1/2),(0,1) of the reference element.
struct OracleElement {
  std::array<Vec2, 3> v;
  Mat2 J;
  double area;
  std::array<Vec2, 3> grad_lambda;

  explicit OracleElement(std::array<Vec2, 3> vertices) : v(vertices) {
    J.col(0) = v[1] - v[0];
    J.col(1) = v[2] - v[0];
    area = 0.5 * J.determinant();
    const Mat2 JinvT = J.inverse().transpose();
    grad_lambda[1] = JinvT * Vec2(1, 0);
    grad_lambda[2] = JinvT * Vec2(0, 1);
    grad_lambda[0] = -grad_lambda[1] - grad_lambda[2];
  }

  std::array<double, 3> lambda(const Vec2& x) const {
    const Vec2 xi = J.inverse() * (x - v[0]);
    return {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
  }

  std::array<double, 6> p2(const Vec2& x) const {
    const auto l = lambda(x);
    return {l[0] * (2 * l[0] - 1), 4 * l[0] * l[1], l[1] * (2 * l[1] - 1), 4 * l[0] * l[2], 4 * l[1] * l[2],
            l[2] * (2 * l[2] - 1)};
  }

  std::array<Vec2, 6> p2_grad(const Vec2& x) const {
    const auto l = lambda(x);
    const auto& g = grad_lambda;
    return {(4 * l[0] - 1) * g[0], 4 * (l[0] * g[1] + l[1] * g[0]), (4 * l[1] - 1) * g[1],
            4 * (l[0] * g[2] + l[2] * g[0]), 4 * (l[1] * g[2] + l[2] * g[1]), (4 * l[2] - 1) * g[2]};
  }

  std::array<double, 3> p1(const Vec2& x) const { return lambda(x); }
};

// Strang-Fix / Dunavant 7-point rule, exact to degree 5, weights summing to 1 (times area).
const std::vector<std::array<double, 4>>& seven_point() {
  static const double a1 = 0.059715871789770, b1 = 0.470142064105115;
  static const double a2 = 0.797426985353087, b2 = 0.101286507323456;
  static const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
  static const std::vector<std::array<double, 4>> rule = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, w0}, {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
      {a2, b2, b2, w2},                {b2, a2, b2, w2}, {b2, b2, a2, w2}};
  return rule;
}

// 3-point Gauss-Legendre on [0,1].
const std::vector<std::pair<double, double>>& gauss3() {
  static const double s = std::sqrt(0.6) / 2;
  static const std::vector<std::pair<double, double>> rule = {{0.5 - s, 5.0 / 18}, {0.5, 8.0 / 18}, {0.5 + s, 5.0 / 18}};
  return rule;
}

Mesh single_element(const std::array<Vec2, 3>& v, BoundaryTag tag) {
  Mesh m;
  m.vertices = {v[0], v[1], v[2]};
  m.elements = {Triangle{0, 1, 2}};
  m.subdomain = {0};
  m.edge_tag = {{std::int8_t(tag), std::int8_t(tag), std::int8_t(tag)}};
  m.subdomain_edge = {{0, 1, 2}};
  detail::compute_areas(m);
  return m;
}

const std::array<Vec2, 3> kTriangle = {Vec2(0.1, 0.2), Vec2(1.3, 0.1), Vec2(0.4, 1.1)};

}  // namespace

TEST(Quadrature, TriangleRuleIntegratesMonomials) {
  // int_T x^a y^b over the reference triangle = a! b! / (a+b+2)!
  auto fact = [](int n) { double f = 1; for (int i = 2; i <= n; ++i) f *= i; return f; };
  for (int deg = 1; deg <= 8; ++deg) {
    const QuadratureRule q = triangle_rule(deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (Index k = 0; k < q.size(); ++k) s += q.weights[k] * std::pow(q.points[k].x(), a) * std::pow(q.points[k].y(), b);
        EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-15) << deg << " " << a << " " << b;
      }
  }
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int n = 1; n <= 6; ++n) {
    const LineRule r = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (Index k = 0; k < r.points.size(); ++k) s += r.weights[k] * std::pow(r.points[k], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-15);
    }
  }
}

TEST(Lagrange, NodalAndMonomialReproduction) {
  for (int D = 1; D <= 4; ++D) {
    const LagrangeBasis b(D);
    EXPECT_EQ(b.size(), lagrange_size(D));
    for (Index i = 0; i < b.size(); ++i) {
      const Vector v = b.values(b.nodes()[i]);
      for (Index j = 0; j < b.size(); ++j) EXPECT_NEAR(v[j], i == j ? 1.0 : 0.0, 1e-12);
    }
    // Interpolating x^a y^b with a+b = D reproduces it (and its gradient) anywhere.
    const Vec2 x(0.21, 0.37);
    for (int a = 0; a <= D; ++a) {
      const int c = D - a;
      double val = 0.0;
      Vec2 grad = Vec2::Zero();
      const Vector phi = b.values(x);
      const auto g = b.gradients(x);
      for (Index i = 0; i < b.size(); ++i) {
        const double f = std::pow(b.nodes()[i].x(), a) * std::pow(b.nodes()[i].y(), c);
        val += f * phi[i];
        grad += f * g.row(i).transpose();
      }
      EXPECT_NEAR(val, std::pow(x.x(), a) * std::pow(x.y(), c), 1e-12);
      const double gx = a ? a * std::pow(x.x(), a - 1) * std::pow(x.y(), c) : 0.0;
      const double gy = c ? c * std::pow(x.x(), a) * std::pow(x.y(), c - 1) : 0.0;
      EXPECT_NEAR(grad.x(), gx, 1e-11);
      EXPECT_NEAR(grad.y(), gy, 1e-11);
    }
  }
}

TEST(DofMap, Counts) {
  const auto d = build_reference_domain();
  const Mesh m = generate_mesh(d, 1);
  const DofMap dm = build_dofmap(m, 2);
  EXPECT_EQ(dm.n_u(), 12 * m.n_elements());
  EXPECT_EQ(dm.n_p(), 3 * m.n_elements());
  EXPECT_THROW(build_dofmap(m, 1), Error);
}

class OneElement : public ::testing::Test {
 protected:
  OneElement() : mesh(single_element(kTriangle, BoundaryTag::wall)), facets(build_facets(mesh)), space(build_space(mesh, 2)), el(kTriangle) {}
  Mesh mesh;
  FacetList facets;
  DGSpace space;
  OracleElement el;

  // Dense oracle loops. Physical points from barycentric weights.
  template <typename Fn>
  void volume(Fn&& fn) const {
    for (const auto& q : seven_point()) fn(q[0] * el.v[0] + q[1] * el.v[1] + q[2] * el.v[2], q[3] * el.area);
  }
  template <typename Fn>
  void edges(Fn&& fn) const {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = el.v[k], b = el.v[(k + 1) % 3];
      const Vec2 n = outward_normal(a, b);
      for (const auto& [t, w] : gauss3()) fn(a + t * (b - a), n, w * (b - a).norm());
    }
  }
};

TEST_F(OneElement, ViscousConsistencyPenaltyMatchDenseOracle) {
  const double nu = 1.0, c11 = 7.5;
  PhysicsConfig cfg;
  cfg.nu = nu;
  cfg.c11 = c11;
  const Matrix A = Matrix(assemble_aip(mesh, facets, space, cfg));
  Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Zero();
  volume([&](const Vec2& x, double w) {
    const auto g = el.p2_grad(x);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) K(i, j) += w * nu * g[i].dot(g[j]);
  });
  edges([&](const Vec2& x, const Vec2& n, double w) {
    const auto p = el.p2(x);
    const auto g = el.p2_grad(x);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        K(i, j) += w * (-nu * g[j].dot(n) * p[i] - nu * g[i].dot(n) * p[j] + c11 * p[i] * p[j]);
  });
  ASSERT_EQ(A.rows(), 12);
  for (int c = 0; c < 2; ++c) {
    EXPECT_LT((A.block(6 * c, 6 * c, 6, 6) - K).norm(), 1e-12 * K.norm());
    EXPECT_LT(A.block(6 * c, 6 * (1 - c), 6, 6).norm(), 1e-14);
  }
}

TEST_F(OneElement, CouplingMatchesDenseOracle) {
  const Matrix B = Matrix(assemble_b(mesh, facets, space));
  Eigen::Matrix<double, 12, 3> K = Eigen::Matrix<double, 12, 3>::Zero();
  volume([&](const Vec2& x, double w) {
    const auto g = el.p2_grad(x);
    const auto psi = el.p1(x);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) K(6 * c + i, j) -= w * psi[j] * g[i][c];
  });
  edges([&](const Vec2& x, const Vec2& n, double w) {
    const auto p = el.p2(x);
    const auto psi = el.p1(x);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) K(6 * c + i, j) += w * psi[j] * p[i] * n[c];
  });
  ASSERT_EQ(B.rows(), 12);
  ASSERT_EQ(B.cols(), 3);
  EXPECT_LT((B - K).norm(), 1e-12 * K.norm());
}

TEST_F(OneElement, InnerProductsMatchDenseOracle) {
  const InnerProducts ip = assemble_inner_products(mesh, space);
  Eigen::Matrix<double, 6, 6> Mv = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix3d Mp = Eigen::Matrix3d::Zero();
  volume([&](const Vec2& x, double w) {
    const auto p = el.p2(x);
    const auto g = el.p2_grad(x);
    const auto psi = el.p1(x);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) Mv(i, j) += w * (p[i] * p[j] + g[i].dot(g[j]));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Mp(i, j) += w * psi[i] * psi[j];
  });
  const Matrix V = Matrix(ip.velocity);
  EXPECT_LT((V.block(0, 0, 6, 6) - Mv).norm(), 1e-12 * Mv.norm());
  EXPECT_LT((V.block(6, 6, 6, 6) - Mv).norm(), 1e-12 * Mv.norm());
  EXPECT_LT((Matrix(ip.pressure) - Mp).norm(), 1e-12 * Mp.norm());
}

class ObstacleFom : public ::testing::Test {
 protected:
  ObstacleFom()
      : domain(build_reference_domain()), mesh(generate_mesh(domain, 1)), facets(build_facets(mesh)), space(build_space(mesh, 2)) {
    cfg.c11 = resolve_penalty(PenaltyMode::scaled, 10.0, 2, mesh.min_edge_length());
  }
  DomainDescription domain;
  Mesh mesh;
  FacetList facets;
  DGSpace space;
  PhysicsConfig cfg;
};

TEST_F(ObstacleFom, ConstantVelocitySeesOnlyDirichletPenalty) {
  const SpMat A = assemble_aip(mesh, facets, space, cfg);
  const Vec2 c(0.7, -1.3);
  const Vector U = interpolate_velocity([&](const Vec2&) { return c; }, mesh, space.dofs);
  double gamma_d = 0.0;
  for (const auto& b : facets.boundary)
    if (is_dirichlet(b.tag)) gamma_d += b.length;
  EXPECT_NEAR(U.dot(A * U), cfg.c11 * gamma_d * c.squaredNorm(), 1e-10 * cfg.c11);
}

TEST_F(ObstacleFom, LinearFieldHasNoInteriorJumpContribution) {
  FacetList interior_only{facets.interior, {}};
  const Vector U = interpolate_velocity([](const Vec2& x) { return Vec2(2 * x.x() - x.y(), 0.5 + x.y()); }, mesh, space.dofs);
  const Vector r1 = assemble_consistency(mesh, interior_only, space, cfg.nu) * U;
  const Vector r2 = assemble_penalty(mesh, interior_only, space, cfg.c11) * U;
  EXPECT_LT(r2.norm(), 1e-12 * cfg.c11);
  // The remaining consistency term pairs a continuous flux with [u] = 0.
  EXPECT_LT(std::abs(U.dot(r1)), 1e-12);
}

TEST_F(ObstacleFom, SymmetricAndCoercive) {
  const SpMat A = assemble_aip(mesh, facets, space, cfg);
  EXPECT_LE(SpMat(A - SpMat(A.transpose())).norm(), 1e-12 * A.norm());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    Vector u(A.rows());
    for (auto& x : u) x = g(rng);
    EXPECT_GT(u.dot(A * u), 0.0);
  }
}

TEST_F(ObstacleFom, CouplingRowSumIsBoundaryFlux) {
  // u = (x^2, -2xy) is divergence free and continuous, so with psi = 1 only the Dirichlet
  // boundary flux survives.
  auto f = [](const Vec2& x) { return Vec2(x.x() * x.x(), -2 * x.x() * x.y()); };
  const Vector U = interpolate_velocity(f, mesh, space.dofs);
  const Vector one = Vector::Ones(space.dofs.n_p());
  const double lhs = U.dot(assemble_b(mesh, facets, space) * one);
  double flux = 0.0;
  for (const auto& b : facets.boundary) {
    if (!is_dirichlet(b.tag)) continue;
    const auto v = mesh.element_vertices(b.element);
    const Vec2 a = v[b.edge], c = v[(b.edge + 1) % 3];
    for (const auto& [t, w] : gauss3()) flux += w * b.length * b.normal.dot(f(a + t * (c - a)));
  }
  EXPECT_NEAR(lhs, flux, 1e-12);
}

TEST_F(ObstacleFom, RightHandSideSupport) {
  PhysicsConfig zero = cfg;
  zero.dirichlet = [](const Vec2&, BoundaryTag) { return Vec2::Zero(); };
  const auto [Z1, Z2] = assemble_rhs(mesh, facets, space, zero);
  EXPECT_EQ(Z1.norm(), 0.0);
  EXPECT_EQ(Z2.norm(), 0.0);

  const auto [F1, F2] = assemble_rhs(mesh, facets, space, cfg);
  std::vector<bool> inflow(mesh.n_elements(), false);
  for (const auto& b : facets.boundary) inflow[b.element] = inflow[b.element] || b.tag == BoundaryTag::inflow;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    double f1 = 0.0, f2 = 0.0;
    for (Index i = 0; i < space.dofs.m_velocity; ++i)
      for (int c = 0; c < 2; ++c) f1 += std::abs(F1[space.dofs.velocity(e, c, i)]);
    for (Index i = 0; i < space.dofs.m_pressure; ++i) f2 += std::abs(F2[space.dofs.pressure(e, i)]);
    if (!inflow[e]) {
      EXPECT_EQ(f1, 0.0) << e;
      EXPECT_EQ(f2, 0.0) << e;
    } else {
      EXPECT_GT(f2, 0.0) << e;
    }
  }
}

TEST_F(ObstacleFom, TangentialWallDataGivesNoContinuityLift) {
  PhysicsConfig c = cfg;
  c.dirichlet = [](const Vec2&, BoundaryTag tag) { return tag == BoundaryTag::wall ? Vec2(1.0, 0.0) : Vec2::Zero(); };
  // Horizontal walls only: restrict to facets with a vertical normal.
  FacetList top;
  for (const auto& b : facets.boundary)
    if (b.tag == BoundaryTag::wall && std::abs(b.normal.x()) < 1e-14) top.boundary.push_back(b);
  EXPECT_LT(assemble_rhs(mesh, top, space, c).second.norm(), 1e-15);
}

TEST_F(ObstacleFom, PressureMassIsDomainArea) {
  const InnerProducts ip = assemble_inner_products(mesh, space);
  const Vector one = Vector::Ones(space.dofs.n_p());
  EXPECT_NEAR(one.dot(ip.pressure * one), 0.94, 1e-13);
  const Vec2 c(0.3, 0.4);
  const Vector U = interpolate_velocity([&](const Vec2&) { return c; }, mesh, space.dofs);
  EXPECT_NEAR(U.dot(ip.velocity * U), 0.94 * c.squaredNorm(), 1e-13);
  Eigen::SimplicialLLT<SpMat> llt_v(ip.velocity), llt_p(ip.pressure);
  EXPECT_EQ(llt_v.info(), Eigen::Success);
  EXPECT_EQ(llt_p.info(), Eigen::Success);
}

TEST_F(ObstacleFom, SolveConvergesAndConservesMass) {
  const StokesSystem sys = assemble_system(mesh, facets, space, cfg);
  const StokesSolution sol = solve_stokes(sys);
  EXPECT_LE(sol.residual, 1e-10);
  EXPECT_LE((sys.B.transpose() * sol.U - sys.F2).norm(), 1e-9 * sys.F2.norm() + 1e-12);
  // Obstacle facets: the trace of u is small in the penalty-weighted sense.
  double jump = 0.0;
  for (const auto& b : facets.boundary) {
    if (b.tag != BoundaryTag::obstacle) continue;
    const auto v = mesh.element_vertices(b.element);
    const Vec2 a = v[b.edge], c = v[(b.edge + 1) % 3];
    for (const auto& [t, w] : gauss3()) jump += w * b.length * evaluate_velocity(sol.U, mesh, space.dofs, a + t * (c - a)).squaredNorm();
  }
  EXPECT_LT(std::sqrt(jump), 0.05);
}

TEST_F(ObstacleFom, ZeroRightHandSideGivesZero) {
  StokesSystem sys = assemble_system(mesh, facets, space, cfg);
  sys.F1.setZero();
  sys.F2.setZero();
  const StokesSolution sol = solve_stokes(sys);
  EXPECT_EQ(sol.U.norm(), 0.0);
  EXPECT_EQ(sol.P.norm(), 0.0);
}

TEST(Poiseuille, ExactInTheDiscreteSpace) {
  const auto d = build_reference_domain(Decomposition::channel);
  for (int k : {0, 1, 2}) {
    const Mesh m = generate_mesh(d, k);
    const FacetList f = build_facets(m);
    const DGSpace s = build_space(m, 2);
    PhysicsConfig cfg;
    cfg.nu = 1.0;
    cfg.c11 = resolve_penalty(PenaltyMode::scaled, 10.0, 2, m.min_edge_length());
    const StokesSolution sol = solve_stokes(assemble_system(m, f, s, cfg));
    const InnerProducts ip = assemble_inner_products(m, s);
    const Vector U = interpolate_velocity([](const Vec2& x) { return Vec2(x.y() * (1 - x.y()), 0.0); }, m, s.dofs);
    const Vector P = interpolate_pressure([](const Vec2& x) { return 2.0 * (1 - x.x()); }, m, s.dofs);
    const Vector eu = sol.U - U, ep = sol.P - P;
    EXPECT_LE(std::sqrt(eu.dot(ip.velocity * eu) / U.dot(ip.velocity * U)), 1e-8) << k;
    EXPECT_LE(std::sqrt(ep.dot(ip.pressure * ep) / P.dot(ip.pressure * P)), 1e-8) << k;
  }
}

TEST(Solver, SingularSystemReportsProbableCause) {
  // All-Neumann channel: pressure is only defined up to a constant.
  auto d = build_reference_domain(Decomposition::channel);
  for (auto& e : d.boundary) e.tag = BoundaryTag::outflow;
  const Mesh m = generate_mesh(d, 0);
  const FacetList f = build_facets(m);
  const DGSpace s = build_space(m, 2);
  PhysicsConfig cfg;
  cfg.c11 = 10.0;
  cfg.source = Vec2(1.0, 0.5);
  EXPECT_THROW(solve_stokes(assemble_system(m, f, s, cfg)), Error);
}
