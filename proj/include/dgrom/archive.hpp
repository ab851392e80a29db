#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "dgrom/affine_operator.hpp"
#include "dgrom/config.hpp"
#include "dgrom/geometry.hpp"
#include "dgrom/lagrange.hpp"
#include "dgrom/mesh.hpp"
#include "dgrom/reduced.hpp"

namespace dgrom {

/// Everything the online phase needs, produced once by the offline phase.
struct OfflineArchive {
  RunConfig config;
  DomainDescription domain;
  Mesh mesh;
  DofMap dofs;
  double c11 = 0.0;
  AffineOperator affine;
  PodBasis velocity, pressure;
  ReducedOperator reduced;
  SpMat Mv, Mp;
  std::vector<Vec2> training_mu;
};

class ArchiveError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline constexpr char archive_magic[8] = {'D', 'G', 'R', 'O', 'M', 'A', 'R', 'C'};
inline constexpr std::uint32_t archive_version = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(prepare(path), std::ios::binary) {
    if (!out_) throw ArchiveError("cannot write archive " + path);
  }

  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void size(Index n) { pod(std::uint64_t(n)); }
  void string(const std::string& s) {
    size(s.size());
    out_.write(s.data(), std::streamsize(s.size()));
  }
  void doubles(const double* p, Index n) { out_.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double))); }
  void vec2(const Vec2& v) { doubles(v.data(), 2); }
  void vector(const Vector& v) {
    size(v.size());
    doubles(v.data(), v.size());
  }
  void matrix(const Matrix& m) {
    size(m.rows());
    size(m.cols());
    doubles(m.data(), m.size());
  }
  void sparse(SpMat m) {
    m.makeCompressed();
    size(m.rows());
    size(m.cols());
    size(m.nonZeros());
    for (Eigen::Index k = 0; k <= m.outerSize(); ++k) pod(std::int64_t(m.outerIndexPtr()[k]));
    for (Eigen::Index k = 0; k < m.nonZeros(); ++k) pod(std::int64_t(m.innerIndexPtr()[k]));
    doubles(m.valuePtr(), m.nonZeros());
  }
  void finish() {
    out_.flush();
    if (!out_) throw ArchiveError("archive write failed");
  }

 private:
  static const std::string& prepare(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return path;
  }

  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw ArchiveError("cannot open archive " + path);
  }

  template <typename T>
  T pod() {
    T v;
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  Index size() {
    const auto n = pod<std::uint64_t>();
    if (n > (std::uint64_t(1) << 40)) throw ArchiveError("corrupt archive " + path_ + ": implausible size");
    return Index(n);
  }
  std::string string() {
    std::string s(size(), '\0');
    read(s.data(), s.size());
    return s;
  }
  void doubles(double* p, Index n) { read(reinterpret_cast<char*>(p), n * sizeof(double)); }
  Vec2 vec2() {
    Vec2 v;
    doubles(v.data(), 2);
    return v;
  }
  Vector vector() {
    Vector v(static_cast<Eigen::Index>(size()));
    doubles(v.data(), v.size());
    return v;
  }
  Matrix matrix() {
    const Index r = size(), c = size();
    Matrix m{static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
    doubles(m.data(), m.size());
    return m;
  }
  SpMat sparse() {
    const Index r = size(), c = size(), nnz = size();
    std::vector<std::int64_t> outer(c + 1), inner(nnz);
    for (auto& o : outer) o = pod<std::int64_t>();
    for (auto& i : inner) i = pod<std::int64_t>();
    std::vector<double> values(nnz);
    doubles(values.data(), nnz);
    Triplets t;
    t.reserve(nnz);
    for (Index col = 0; col < c; ++col)
      for (std::int64_t k = outer[col]; k < outer[col + 1]; ++k) {
        if (k < 0 || Index(k) >= nnz || inner[k] < 0 || Index(inner[k]) >= r)
          throw ArchiveError("corrupt archive " + path_ + ": bad sparse index");
        t.emplace_back(Eigen::Index(inner[k]), Eigen::Index(col), values[k]);
      }
    return from_triplets(r, c, t);
  }

 private:
  void read(char* p, Index n) {
    in_.read(p, std::streamsize(n));
    if (Index(in_.gcount()) != n) throw ArchiveError("corrupt archive " + path_ + ": unexpected end of file");
  }

  std::ifstream in_;
  std::string path_;
};

inline void write_recipe(Writer& w, const ThetaRecipe& r) {
  w.pod(std::uint8_t(r.kind));
  w.pod(r.s);
  w.pod(r.r);
  w.pod(r.a);
  w.pod(r.b);
  w.pod(r.tx);
  w.pod(r.ty);
}

inline ThetaRecipe read_recipe(Reader& rd) {
  ThetaRecipe r;
  const auto kind = rd.pod<std::uint8_t>();
  if (kind > std::uint8_t(ThetaKind::stretch)) throw ArchiveError("corrupt archive: unknown theta kind");
  r.kind = ThetaKind(kind);
  r.s = rd.pod<std::uint32_t>();
  r.r = rd.pod<std::uint32_t>();
  r.a = rd.pod<std::uint8_t>();
  r.b = rd.pod<std::uint8_t>();
  r.tx = rd.pod<double>();
  r.ty = rd.pod<double>();
  return r;
}

inline Term read_term(Reader& rd) {
  const auto t = rd.pod<std::uint8_t>();
  if (t > std::uint8_t(Term::f2)) throw ArchiveError("corrupt archive: unknown term");
  return Term(t);
}

inline void write_basis(Writer& w, const PodBasis& b) {
  w.matrix(b.B);
  w.vector(b.eigenvalues);
  w.size(b.rank);
  w.pod(b.min_raw_eigenvalue);
}

inline PodBasis read_basis(Reader& rd) {
  PodBasis b;
  b.B = rd.matrix();
  b.eigenvalues = rd.vector();
  b.rank = rd.size();
  b.min_raw_eigenvalue = rd.pod<double>();
  return b;
}

}  // namespace detail

inline void save_archive(const OfflineArchive& a, const std::string& path) {
  detail::Writer w(path);
  for (char c : detail::archive_magic) w.pod(c);
  w.pod(detail::archive_version);
  w.string(to_text(a.config));

  const auto& d = a.domain;
  w.size(d.vertices.size());
  for (const auto& v : d.vertices) w.vec2(v);
  w.pod(std::int64_t(d.tip ? std::int64_t(*d.tip) : -1));
  w.vec2(d.mu_bar);
  w.pod(d.box);
  w.size(d.subdomains.size());
  for (const auto& t : d.subdomains)
    for (Index v : t) w.size(v);
  w.size(d.boundary.size());
  for (const auto& e : d.boundary) {
    w.size(e.a);
    w.size(e.b);
    w.pod(std::uint8_t(e.tag));
  }

  const auto& m = a.mesh;
  w.size(m.vertices.size());
  for (const auto& v : m.vertices) w.vec2(v);
  w.size(m.elements.size());
  for (Index e = 0; e < m.elements.size(); ++e) {
    for (Index v : m.elements[e]) w.size(v);
    w.size(m.subdomain[e]);
    w.pod(m.edge_tag[e]);
    w.pod(m.subdomain_edge[e]);
  }

  w.size(a.dofs.degree);
  w.pod(a.c11);

  w.size(a.affine.n_u());
  w.size(a.affine.n_p());
  w.pod(std::uint8_t(a.affine.alpha_scaling()));
  w.size(a.affine.size());
  for (const auto& t : a.affine.terms()) {
    w.pod(std::uint8_t(t.term));
    detail::write_recipe(w, t.theta);
    if (is_matrix_term(t.term)) w.sparse(t.block);
    else w.vector(t.vector);
  }

  detail::write_basis(w, a.velocity);
  detail::write_basis(w, a.pressure);

  const auto& r = a.reduced;
  w.size(r.n_v);
  w.size(r.n_p);
  w.pod(std::uint8_t(r.alpha_scaling));
  w.size(r.blocks.size());
  for (Index i = 0; i < r.blocks.size(); ++i) {
    w.pod(std::uint8_t(r.terms[i]));
    detail::write_recipe(w, r.recipes[i]);
    w.matrix(r.blocks[i]);
  }

  w.sparse(a.Mv);
  w.sparse(a.Mp);
  w.size(a.training_mu.size());
  for (const auto& mu : a.training_mu) w.vec2(mu);
  w.finish();
}

inline OfflineArchive load_archive(const std::string& path) {
  detail::Reader rd(path);
  for (char c : detail::archive_magic)
    if (rd.pod<char>() != c) throw ArchiveError(path + " is not an offline archive");
  if (const auto v = rd.pod<std::uint32_t>(); v != detail::archive_version)
    throw ArchiveError("unsupported archive version " + std::to_string(v));

  OfflineArchive a;
  a.config = parse_config(rd.string());

  auto& d = a.domain;
  d.vertices.resize(rd.size());
  for (auto& v : d.vertices) v = rd.vec2();
  if (const auto tip = rd.pod<std::int64_t>(); tip >= 0) d.tip = Index(tip);
  d.mu_bar = rd.vec2();
  d.box = rd.pod<ParameterBox>();
  d.subdomains.resize(rd.size());
  for (auto& t : d.subdomains)
    for (auto& v : t) v = rd.size();
  d.boundary.resize(rd.size());
  for (auto& e : d.boundary) {
    e.a = rd.size();
    e.b = rd.size();
    e.tag = BoundaryTag(rd.pod<std::uint8_t>());
  }
  validate_domain(d);

  auto& m = a.mesh;
  m.vertices.resize(rd.size());
  for (auto& v : m.vertices) v = rd.vec2();
  const Index ne = rd.size();
  m.elements.resize(ne);
  m.subdomain.resize(ne);
  m.edge_tag.resize(ne);
  m.subdomain_edge.resize(ne);
  for (Index e = 0; e < ne; ++e) {
    for (auto& v : m.elements[e]) {
      v = rd.size();
      if (v >= m.vertices.size()) throw ArchiveError("corrupt archive: bad element vertex");
    }
    m.subdomain[e] = rd.size();
    m.edge_tag[e] = rd.pod<std::array<std::int8_t, 3>>();
    m.subdomain_edge[e] = rd.pod<std::array<std::int8_t, 3>>();
  }
  detail::compute_areas(m);

  a.dofs = build_dofmap(ne, int(rd.size()));
  a.c11 = rd.pod<double>();

  const Index n_u = rd.size(), n_p = rd.size();
  const bool alpha = rd.pod<std::uint8_t>() != 0;
  std::vector<AffineTerm> terms(rd.size());
  for (auto& t : terms) {
    t.term = detail::read_term(rd);
    t.theta = detail::read_recipe(rd);
    if (is_matrix_term(t.term)) t.block = rd.sparse();
    else t.vector = rd.vector();
  }
  a.affine = AffineOperator(n_u, n_p, alpha, std::move(terms));

  a.velocity = detail::read_basis(rd);
  a.pressure = detail::read_basis(rd);

  auto& r = a.reduced;
  r.n_v = rd.size();
  r.n_p = rd.size();
  r.alpha_scaling = rd.pod<std::uint8_t>() != 0;
  const Index nb = rd.size();
  for (Index i = 0; i < nb; ++i) {
    r.terms.push_back(detail::read_term(rd));
    r.recipes.push_back(detail::read_recipe(rd));
    r.blocks.push_back(rd.matrix());
  }

  a.Mv = rd.sparse();
  a.Mp = rd.sparse();
  a.training_mu.resize(rd.size());
  for (auto& mu : a.training_mu) mu = rd.vec2();

  if (a.dofs.n_u() != n_u || a.dofs.n_p() != n_p || a.velocity.n_dofs() != n_u || a.pressure.n_dofs() != n_p ||
      Index(a.Mv.rows()) != n_u || Index(a.Mp.rows()) != n_p)
    throw ArchiveError("archive sections have inconsistent sizes");
  return a;
}

}  // namespace dgrom
