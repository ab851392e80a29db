#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "dgrom/common.hpp"
#include "dgrom/geometry.hpp"

namespace dgrom {

/// Conforming triangulation. Local edge k of an element joins its vertices k and (k+1)%3.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<Triangle> elements;
  std::vector<Index> subdomain;  // owning subdomain per element
  std::vector<double> areas;     // signed, positive for counter-clockwise elements
  // Per element edge: boundary tag (or -1) and the subdomain edge it lies on (or -1).
  std::vector<std::array<std::int8_t, 3>> edge_tag;
  std::vector<std::array<std::int8_t, 3>> subdomain_edge;

  Index n_elements() const { return elements.size(); }

  std::array<Vec2, 3> element_vertices(Index e) const {
    const auto& t = elements[e];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }

  double area() const {
    double s = 0.0;
    for (double a : areas) s += a;
    return s;
  }

  double min_edge_length() const {
    double h = std::numeric_limits<double>::infinity();
    for (Index e = 0; e < n_elements(); ++e) {
      const auto v = element_vertices(e);
      for (int k = 0; k < 3; ++k) h = std::min(h, (v[(k + 1) % 3] - v[k]).norm());
    }
    return h;
  }

  std::optional<BoundaryTag> boundary_tag(Index e, int k) const {
    if (edge_tag[e][k] < 0) return std::nullopt;
    return static_cast<BoundaryTag>(edge_tag[e][k]);
  }
};

namespace detail {

inline void compute_areas(Mesh& m) {
  m.areas.resize(m.n_elements());
  for (Index e = 0; e < m.n_elements(); ++e) {
    const auto v = m.element_vertices(e);
    m.areas[e] = signed_area(v[0], v[1], v[2]);
  }
}

}  // namespace detail

/// Uniformly refines every subdomain `refinement` times (4-way splits). Vertices on subdomain
/// edges are keyed combinatorially so neighbouring subdomains share them bit-for-bit.
inline Mesh generate_mesh(const DomainDescription& domain, int refinement) {
  if (refinement < 0) throw Error("refinement level must be nonnegative");
  if (refinement > 12) throw Error("refinement level too large");
  const Index n = Index{1} << refinement;
  const auto& P = domain.vertices;

  Mesh m;
  // Key: (kind, a, b, c). kind 0: domain vertex a; 1: point on edge (a<b) with weight c at b;
  // 2: interior lattice point (i=b, j=c) of subdomain a.
  std::map<std::tuple<int, Index, Index, Index>, Index> ids;

  for (Index s = 0; s < domain.n_subdomains(); ++s) {
    const auto& tri = domain.subdomains[s];
    auto node = [&](Index i, Index j) -> Index {
      const std::array<Index, 3> w = {n - i - j, i, j};
      std::tuple<int, Index, Index, Index> key;
      Vec2 x;
      int nonzero = 0;
      for (Index q : w) nonzero += q > 0;
      if (nonzero == 1) {
        const Index g = tri[w[0] ? 0 : (w[1] ? 1 : 2)];
        key = {0, g, 0, 0};
        x = P[g];
      } else if (nonzero == 2) {
        int p = -1, q = -1;
        for (int k = 0; k < 3; ++k)
          if (w[k]) (p < 0 ? p : q) = k;
        Index ga = tri[p], gb = tri[q], wb = w[q];
        if (ga > gb) {
          std::swap(ga, gb);
          wb = w[p];
        }
        key = {1, ga, gb, wb};
        x = (static_cast<double>(n - wb) * P[ga] + static_cast<double>(wb) * P[gb]) / static_cast<double>(n);
      } else {
        key = {2, s, i, j};
        x = (static_cast<double>(w[0]) * P[tri[0]] + static_cast<double>(w[1]) * P[tri[1]] +
             static_cast<double>(w[2]) * P[tri[2]]) /
            static_cast<double>(n);
      }
      auto [it, inserted] = ids.try_emplace(key, m.vertices.size());
      if (inserted) m.vertices.push_back(x);
      return it->second;
    };
    // Which subdomain edge (0: j=0, 1: i+j=n, 2: i=0) holds both lattice points, or -1.
    auto on_edge = [&](Index i0, Index j0, Index i1, Index j1) -> int {
      if (j0 == 0 && j1 == 0) return 0;
      if (i0 + j0 == n && i1 + j1 == n) return 1;
      if (i0 == 0 && i1 == 0) return 2;
      return -1;
    };
    auto add = [&](std::array<std::pair<Index, Index>, 3> l) {
      Triangle t;
      std::array<std::int8_t, 3> tags{}, sedges{};
      for (int k = 0; k < 3; ++k) {
        t[k] = node(l[k].first, l[k].second);
        const auto& a = l[k];
        const auto& b = l[(k + 1) % 3];
        const int E = on_edge(a.first, a.second, b.first, b.second);
        sedges[k] = static_cast<std::int8_t>(E);
        tags[k] = -1;
        if (E >= 0) {
          if (auto tag = domain.boundary_tag(tri[E], tri[(E + 1) % 3]))
            tags[k] = static_cast<std::int8_t>(*tag);
        }
      }
      m.elements.push_back(t);
      m.subdomain.push_back(s);
      m.edge_tag.push_back(tags);
      m.subdomain_edge.push_back(sedges);
    };
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i + j < n; ++i) {
        add({{{i, j}, {i + 1, j}, {i, j + 1}}});
        if (i + j + 1 < n) add({{{i + 1, j}, {i + 1, j + 1}, {i, j + 1}}});
      }
    }
  }
  detail::compute_areas(m);
  return m;
}

struct InteriorFacet {
  Index plus = 0, minus = 0;  // plus is the lower element index
  int plus_edge = 0, minus_edge = 0;
  bool reversed = true;  // minus edge runs opposite to the plus edge
  Vec2 normal;           // unit, from plus to minus
  double length = 0.0;
};

struct BoundaryFacet {
  Index element = 0;
  int edge = 0;
  BoundaryTag tag = BoundaryTag::wall;
  Vec2 normal;  // outward
  double length = 0.0;
};

struct FacetList {
  std::vector<InteriorFacet> interior;
  std::vector<BoundaryFacet> boundary;
};

inline FacetList build_facets(const Mesh& mesh) {
  std::map<std::pair<Index, Index>, std::vector<std::pair<Index, int>>> edges;
  for (Index e = 0; e < mesh.n_elements(); ++e)
    for (int k = 0; k < 3; ++k) {
      const Index a = mesh.elements[e][k], b = mesh.elements[e][(k + 1) % 3];
      edges[std::minmax(a, b)].push_back({e, k});
    }

  FacetList f;
  for (const auto& [key, owners] : edges) {
    if (owners.size() > 2) throw Error("edge shared by more than two elements");
    const auto [e, k] = owners.front();
    const auto v = mesh.element_vertices(e);
    const Vec2& a = v[k];
    const Vec2& b = v[(k + 1) % 3];
    if (owners.size() == 2) {
      auto [p, pk] = owners[0];
      auto [q, qk] = owners[1];
      if (q < p) {
        std::swap(p, q);
        std::swap(pk, qk);
      }
      const auto pv = mesh.element_vertices(p);
      const Index pa = mesh.elements[p][pk];
      InteriorFacet fi;
      fi.plus = p;
      fi.minus = q;
      fi.plus_edge = pk;
      fi.minus_edge = qk;
      fi.reversed = mesh.elements[q][qk] != pa;
      fi.normal = outward_normal(pv[pk], pv[(pk + 1) % 3]);
      fi.length = (pv[(pk + 1) % 3] - pv[pk]).norm();
      f.interior.push_back(fi);
    } else {
      const auto tag = mesh.boundary_tag(e, k);
      if (!tag) throw Error("non-conforming edge (hanging node) on element " + std::to_string(e));
      f.boundary.push_back({e, k, *tag, outward_normal(a, b), (b - a).norm()});
    }
  }
  return f;
}

/// Moves every vertex through the map of its owning subdomain; connectivity is unchanged.
inline Mesh deform_mesh(const Mesh& mesh, const MapSet& ms) {
  Mesh out = mesh;
  std::vector<bool> done(mesh.vertices.size(), false);
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    for (Index v : mesh.elements[e]) {
      const Vec2 x = map_point(ms, mesh.subdomain[e], mesh.vertices[v]);
      if (!done[v]) {
        out.vertices[v] = x;
        done[v] = true;
      } else if ((out.vertices[v] - x).norm() > 1e-12) {
        throw Error("inconsistent image of shared vertex " + std::to_string(v));
      }
    }
  }
  detail::compute_areas(out);
  return out;
}

}  // namespace dgrom
