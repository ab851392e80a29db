#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgrom/common.hpp"

namespace dgrom {

/// Physical role of a boundary edge. Everything except `outflow` carries Dirichlet data.
enum class BoundaryTag : std::uint8_t { wall = 0, inflow = 1, outflow = 2, obstacle = 3 };

inline bool is_dirichlet(BoundaryTag t) { return t != BoundaryTag::outflow; }

inline const char* to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::wall: return "wall";
    case BoundaryTag::inflow: return "inflow";
    case BoundaryTag::outflow: return "outflow";
    case BoundaryTag::obstacle: return "obstacle";
  }
  return "?";
}

struct ParameterBox {
  double x_lo = 0.4, x_hi = 0.6, y_lo = 0.2, y_hi = 0.4;

  bool contains(double x, double y) const {
    constexpr double eps = 1e-14;
    return x >= x_lo - eps && x <= x_hi + eps && y >= y_lo - eps && y <= y_hi + eps;
  }
  std::array<Vec2, 4> corners() const {
    return {Vec2(x_lo, y_lo), Vec2(x_hi, y_lo), Vec2(x_hi, y_hi), Vec2(x_lo, y_hi)};
  }
  Vec2 center() const { return Vec2(0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)); }
  bool operator==(const ParameterBox&) const = default;
};

/// Obstacle-tip position; only constructible inside its admissible box.
class ParameterTuple {
 public:
  ParameterTuple(double x, double y, const ParameterBox& box = {}) : value_(x, y) {
    if (!std::isfinite(x) || !std::isfinite(y) || !box.contains(x, y)) {
      std::ostringstream os;
      os << "parameter (" << x << ", " << y << ") outside the admissible box [" << box.x_lo
         << "," << box.x_hi << "]x[" << box.y_lo << "," << box.y_hi << "]";
      throw Error(os.str());
    }
  }
  ParameterTuple(const Vec2& v, const ParameterBox& box = {}) : ParameterTuple(v.x(), v.y(), box) {}

  const Vec2& value() const { return value_; }
  double x() const { return value_.x(); }
  double y() const { return value_.y(); }
  bool operator==(const ParameterTuple& o) const { return value_ == o.value_; }

 private:
  Vec2 value_;
};

/// Boundary edge between two domain vertices, oriented with the domain on its left.
struct BoundaryEdge {
  Index a = 0, b = 0;
  BoundaryTag tag = BoundaryTag::wall;
  bool operator==(const BoundaryEdge&) const = default;
};

using Triangle = std::array<Index, 3>;

/// Reference configuration of a polygonal domain split into triangular subdomains.
/// At most one vertex (the obstacle tip) moves with the parameter.
struct DomainDescription {
  std::vector<Vec2> vertices;  // positions at mu_bar
  std::optional<Index> tip;
  Vec2 mu_bar{0.5, 0.3};
  ParameterBox box;
  std::vector<Triangle> subdomains;  // counter-clockwise
  std::vector<BoundaryEdge> boundary;

  Index n_subdomains() const { return subdomains.size(); }

  bool is_fixed(Index v) const { return !tip || *tip != v; }

  std::vector<Vec2> vertices_at(const Vec2& mu) const {
    std::vector<Vec2> v = vertices;
    if (tip) v[*tip] = mu;
    return v;
  }

  std::array<Vec2, 3> triangle(Index s, const std::vector<Vec2>& pos) const {
    const auto& t = subdomains.at(s);
    return {pos[t[0]], pos[t[1]], pos[t[2]]};
  }
  std::array<Vec2, 3> reference_triangle(Index s) const { return triangle(s, vertices); }

  /// Tag of the boundary edge joining vertices a and b (either orientation).
  std::optional<BoundaryTag> boundary_tag(Index a, Index b) const {
    for (const auto& e : boundary)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e.tag;
    return std::nullopt;
  }

  double area() const {
    double s = 0.0;
    for (Index i = 0; i < subdomains.size(); ++i) {
      const auto t = reference_triangle(i);
      s += signed_area(t[0], t[1], t[2]);
    }
    return s;
  }

  bool operator==(const DomainDescription&) const = default;
};

namespace detail {

inline void check_positive_areas(const DomainDescription& d, const std::vector<Vec2>& pos,
                                 const char* where) {
  for (Index s = 0; s < d.subdomains.size(); ++s) {
    const auto t = d.triangle(s, pos);
    if (!(signed_area(t[0], t[1], t[2]) > 0.0)) {
      std::ostringstream os;
      os << "degenerate subdomain " << s << " (nonpositive area) at " << where;
      throw Error(os.str());
    }
  }
}

}  // namespace detail

/// Checks orientation, conformity, boundary closure and the area identity. Throws on failure.
inline void validate_domain(const DomainDescription& d) {
  if (d.subdomains.empty()) throw Error("domain has no subdomains");
  for (const auto& t : d.subdomains)
    for (Index v : t)
      if (v >= d.vertices.size()) throw Error("subdomain references unknown vertex");
  if (d.tip && *d.tip >= d.vertices.size()) throw Error("tip vertex index out of range");

  detail::check_positive_areas(d, d.vertices, "reference parameter");
  if (d.tip) {
    for (const auto& c : d.box.corners()) detail::check_positive_areas(d, d.vertices_at(c), "box corner");
    detail::check_positive_areas(d, d.vertices_at(d.box.center()), "box center");
  }

  // Oriented subdomain edges: interior ones must cancel pairwise, the rest must be declared boundary.
  std::map<std::pair<Index, Index>, int> directed;
  for (const auto& t : d.subdomains)
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  for (const auto& [e, count] : directed) {
    if (count != 1) throw Error("subdomain edge repeated with the same orientation (overlap)");
    const bool twin = directed.count({e.second, e.first}) > 0;
    const bool declared = std::any_of(d.boundary.begin(), d.boundary.end(), [&](const BoundaryEdge& b) {
      return b.a == e.first && b.b == e.second;
    });
    if (twin == declared) throw Error("subdomain edge is neither matched nor declared boundary");
  }
  for (const auto& b : d.boundary)
    if (!directed.count({b.a, b.b})) throw Error("boundary edge not in any subdomain");

  double enclosed = 0.0;
  for (const auto& b : d.boundary) enclosed += 0.5 * cross(d.vertices[b.a], d.vertices[b.b]);
  const double covered = d.area();
  if (std::abs(enclosed - covered) > 1e-12 * std::abs(enclosed))
    throw Error("subdomain areas do not add up to the enclosed area");
}

/// Decompositions known to build_reference_domain.
enum class Decomposition { obstacle_fan, channel };

/// Unit square minus the triangular obstacle (0.3,0),(0.5,0.3),(0.7,0), split into a fan of 9
/// triangles around the tip. `channel` is the obstacle-free square in two triangles.
inline DomainDescription build_reference_domain(Decomposition kind = Decomposition::obstacle_fan) {
  DomainDescription d;
  if (kind == Decomposition::channel) {
    d.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    d.subdomains = {Triangle{0, 1, 2}, Triangle{0, 2, 3}};
    d.boundary = {{0, 1, BoundaryTag::wall},
                  {1, 2, BoundaryTag::outflow},
                  {2, 3, BoundaryTag::wall},
                  {3, 0, BoundaryTag::inflow}};
    validate_domain(d);
    return d;
  }

  // Boundary chain, clockwise from the left obstacle foot to the right one.
  const std::vector<Vec2> chain = {Vec2(0.3, 0.0), Vec2(0.0, 0.0), Vec2(0.0, 0.5), Vec2(0.0, 1.0),
                                   Vec2(1.0 / 3.0, 1.0), Vec2(2.0 / 3.0, 1.0), Vec2(1.0, 1.0),
                                   Vec2(1.0, 0.5), Vec2(1.0, 0.0), Vec2(0.7, 0.0)};
  const std::vector<BoundaryTag> chain_tags = {
      BoundaryTag::wall,   BoundaryTag::inflow,  BoundaryTag::inflow,  BoundaryTag::wall,
      BoundaryTag::wall,   BoundaryTag::wall,    BoundaryTag::outflow, BoundaryTag::outflow,
      BoundaryTag::wall};
  d.vertices = chain;
  d.vertices.push_back(d.mu_bar);
  const Index tip = chain.size();
  d.tip = tip;
  for (Index i = 0; i + 1 < chain.size(); ++i) {
    d.subdomains.push_back(Triangle{i + 1, i, tip});
    d.boundary.push_back({i + 1, i, chain_tags[i]});
  }
  d.boundary.push_back({0, tip, BoundaryTag::obstacle});
  d.boundary.push_back({tip, chain.size() - 1, BoundaryTag::obstacle});
  validate_domain(d);
  return d;
}

/// Same decomposition with another reference parameter and box.
inline DomainDescription with_reference(DomainDescription d, const Vec2& mu_bar, const ParameterBox& box) {
  if (!box.contains(mu_bar.x(), mu_bar.y())) throw Error("reference parameter lies outside the parameter box");
  d.mu_bar = mu_bar;
  d.box = box;
  if (d.tip) d.vertices[*d.tip] = mu_bar;
  validate_domain(d);
  return d;
}

/// x = G xhat + c with cached determinant and inverses.
struct AffineMap {
  Mat2 G = Mat2::Identity();
  Vec2 c = Vec2::Zero();
  double det = 1.0;
  Mat2 Ginv = Mat2::Identity();
  Mat2 GinvT = Mat2::Identity();

  static AffineMap identity() { return {}; }

  static AffineMap from_jacobian(const Mat2& G, const Vec2& c) {
    AffineMap m;
    m.G = G;
    m.c = c;
    m.det = G.determinant();
    if (!(m.det > 0.0)) throw Error("affine map is not orientation preserving (det G <= 0)");
    m.Ginv = G.inverse();
    m.GinvT = m.Ginv.transpose();
    return m;
  }

  /// Solves the three-vertex correspondence from[k] -> to[k] for (G, c).
  static AffineMap from_vertices(const std::array<Vec2, 3>& from, const std::array<Vec2, 3>& to) {
    if (from == to) return identity();
    Eigen::Matrix3d V;
    for (int k = 0; k < 3; ++k) V.row(k) << from[k].x(), from[k].y(), 1.0;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(V);
    if (lu.rank() < 3) throw Error("collinear reference vertices: vertex correspondence is singular");
    Eigen::Matrix<double, 3, 2> rhs;
    for (int k = 0; k < 3; ++k) rhs.row(k) = to[k].transpose();
    const Eigen::Matrix<double, 3, 2> sol = lu.solve(rhs);
    Mat2 G;
    G << sol(0, 0), sol(1, 0), sol(0, 1), sol(1, 1);
    return from_jacobian(G, Vec2(sol(2, 0), sol(2, 1)));
  }

  Vec2 operator()(const Vec2& xhat) const { return G * xhat + c; }
};

/// Per-subdomain maps from the reference configuration to the one at `mu`.
struct MapSet {
  Vec2 mu;
  std::vector<AffineMap> maps;
  std::vector<std::array<Vec2, 3>> reference;  // reference subdomain triangles
  double alpha = 1.0;                           // |Gamma u Gamma_D|(mu) / |Gamma u Gamma_D|(mu_bar)
};

namespace detail {

/// Subdomain-level skeleton: interior subdomain edges plus Dirichlet boundary edges.
inline double skeleton_length(const DomainDescription& d, const std::vector<Vec2>& pos) {
  std::map<std::pair<Index, Index>, bool> seen;
  double len = 0.0;
  for (const auto& t : d.subdomains) {
    for (int k = 0; k < 3; ++k) {
      Index a = t[k], b = t[(k + 1) % 3];
      auto key = std::minmax(a, b);
      if (seen.count(key)) continue;
      seen[key] = true;
      const auto tag = d.boundary_tag(a, b);
      if (!tag || is_dirichlet(*tag)) len += (pos[a] - pos[b]).norm();
    }
  }
  return len;
}

}  // namespace detail

inline MapSet build_maps(const DomainDescription& domain, const ParameterTuple& mu) {
  MapSet ms;
  ms.mu = mu.value();
  const auto target = domain.vertices_at(mu.value());
  for (Index s = 0; s < domain.n_subdomains(); ++s) {
    const auto from = domain.reference_triangle(s);
    ms.reference.push_back(from);
    try {
      ms.maps.push_back(AffineMap::from_vertices(from, domain.triangle(s, target)));
    } catch (const Error& e) {
      throw Error("subdomain " + std::to_string(s) + ": " + e.what());
    }
  }
  ms.alpha = detail::skeleton_length(domain, target) / detail::skeleton_length(domain, domain.vertices);
  return ms;
}

/// Barycentric coordinates of p in triangle t.
inline std::array<double, 3> barycentric(const std::array<Vec2, 3>& t, const Vec2& p) {
  const double a = signed_area(t[0], t[1], t[2]);
  return {signed_area(p, t[1], t[2]) / a, signed_area(t[0], p, t[2]) / a,
          signed_area(t[0], t[1], p) / a};
}

inline bool inside(const std::array<Vec2, 3>& t, const Vec2& p, double tol = 1e-12) {
  const auto l = barycentric(t, p);
  return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol;
}

inline Vec2 map_point(const MapSet& ms, Index subdomain, const Vec2& xhat) {
  if (subdomain >= ms.maps.size()) throw Error("subdomain index out of range");
  if (!inside(ms.reference[subdomain], xhat))
    throw Error("point lies outside reference subdomain " + std::to_string(subdomain));
  return ms.maps[subdomain](xhat);
}

struct ValidationReport {
  struct Interface {
    Index first = 0, second = 0;
    double residual = 0.0;
  };
  std::vector<double> det;
  std::vector<Interface> interfaces;
  double alpha = 1.0;
  bool passed = true;
};

inline ValidationReport validate_maps(const MapSet& ms, const DomainDescription& domain) {
  ValidationReport r;
  r.alpha = ms.alpha;
  for (const auto& m : ms.maps) {
    r.det.push_back(m.det);
    if (!(m.det > 0.0)) r.passed = false;
  }
  for (Index i = 0; i < domain.n_subdomains(); ++i) {
    for (Index j = i + 1; j < domain.n_subdomains(); ++j) {
      std::vector<Index> shared;
      for (Index v : domain.subdomains[i])
        for (Index w : domain.subdomains[j])
          if (v == w) shared.push_back(v);
      if (shared.size() < 2) continue;
      double res = 0.0;
      for (Index v : shared) {
        const Vec2& x = domain.vertices[v];
        res = std::max(res, (ms.maps[i](x) - ms.maps[j](x)).norm());
      }
      r.interfaces.push_back({i, j, res});
      if (res > 1e-14) r.passed = false;
    }
  }
  return r;
}

}  // namespace dgrom
