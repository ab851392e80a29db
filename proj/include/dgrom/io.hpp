#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/SparseExtra>

#include "dgrom/common.hpp"
#include "dgrom/lagrange.hpp"
#include "dgrom/mesh.hpp"

namespace dgrom {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

/// Comma-separated table with a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(open_output(path)), width_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("CSV row has the wrong number of columns");
    for (Index i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  void numbers(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
  }

 private:
  std::ofstream out_;
  Index width_;
};

/// One velocity/pressure pair written as `<name>_u_x`, `<name>_u_y`, `<name>_p` and `<name>_velocity`.
struct VtkField {
  std::string name;
  Vector U, P;
};

/// Legacy ASCII VTK unstructured grid. Each element contributes its own copy of the degree-D
/// lattice points, split into D^2 linear triangles, so discontinuities stay visible.
inline void write_vtk(const std::string& path, const Mesh& mesh, const DofMap& dofs, const std::vector<VtkField>& fields,
                      const std::string& title = "dgrom") {
  const int D = dofs.degree;
  const LagrangeBasis vel(D), pre(D - 1);
  const Index m = vel.size();
  std::vector<Vector> pressure_at_node;
  for (const auto& xi : vel.nodes()) pressure_at_node.push_back(pre.values(xi));
  for (const auto& f : fields)
    if (Index(f.U.size()) != dofs.n_u() || Index(f.P.size()) != dofs.n_p())
      throw Error("VTK field '" + f.name + "' does not match the DOF map");

  auto node = [D](int i, int j) {
    int k = 0;
    for (int jj = 0; jj < j; ++jj) k += D + 1 - jj;
    return Index(k + i);
  };
  std::vector<std::array<Index, 3>> cells;
  for (int j = 0; j < D; ++j)
    for (int i = 0; i + j < D; ++i) {
      cells.push_back({node(i, j), node(i + 1, j), node(i, j + 1)});
      if (i + j < D - 1) cells.push_back({node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)});
    }

  auto out = open_output(path);
  const Index ne = mesh.n_elements(), np = ne * m;
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (Index e = 0; e < ne; ++e) {
    const ElementMap em(mesh.element_vertices(e));
    for (const auto& xi : vel.nodes()) {
      const Vec2 x = em.to_physical(xi);
      out << format_number(x.x()) << " " << format_number(x.y()) << " 0\n";
    }
  }
  out << "CELLS " << ne * cells.size() << " " << 4 * ne * cells.size() << "\n";
  for (Index e = 0; e < ne; ++e)
    for (const auto& c : cells) out << "3 " << e * m + c[0] << " " << e * m + c[1] << " " << e * m + c[2] << "\n";
  out << "CELL_TYPES " << ne * cells.size() << "\n";
  for (Index k = 0; k < ne * cells.size(); ++k) out << "5\n";

  out << "POINT_DATA " << np << "\n";
  for (const auto& f : fields) {
    for (int c = 0; c < 2; ++c) {
      out << "SCALARS " << f.name << (c == 0 ? "_u_x" : "_u_y") << " double 1\nLOOKUP_TABLE default\n";
      for (Index e = 0; e < ne; ++e)
        for (Index i = 0; i < m; ++i) out << format_number(f.U[dofs.velocity(e, c, i)]) << "\n";
    }
    out << "SCALARS " << f.name << "_p double 1\nLOOKUP_TABLE default\n";
    for (Index e = 0; e < ne; ++e)
      for (Index i = 0; i < m; ++i) {
        double p = 0.0;
        for (Index k = 0; k < dofs.m_pressure; ++k) p += pressure_at_node[i][k] * f.P[dofs.pressure(e, k)];
        out << format_number(p) << "\n";
      }
    out << "VECTORS " << f.name << "_velocity double\n";
    for (Index e = 0; e < ne; ++e)
      for (Index i = 0; i < m; ++i)
        out << format_number(f.U[dofs.velocity(e, 0, i)]) << " " << format_number(f.U[dofs.velocity(e, 1, i)]) << " 0\n";
  }
  if (!out) throw Error("VTK write failed: " + path);
}

/// Vertices, then elements with their subdomain.
inline void write_mesh_text(const std::string& path, const Mesh& mesh) {
  auto out = open_output(path);
  out << "vertices " << mesh.vertices.size() << "\n";
  for (const auto& v : mesh.vertices) out << format_number(v.x()) << " " << format_number(v.y()) << "\n";
  out << "elements " << mesh.n_elements() << "\n";
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.elements[e];
    out << t[0] << " " << t[1] << " " << t[2] << " " << mesh.subdomain[e] << "\n";
  }
}

inline void write_matrix_market(const std::string& path, const SpMat& m) {
  open_output(path).close();
  if (!Eigen::saveMarket(m, path)) throw Error("cannot write " + path);
}

/// One coefficient per line.
inline void write_vector(const std::string& path, const Vector& v) {
  auto out = open_output(path);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_number(v[i]) << "\n";
}

inline Vector read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v;
    if (!(ls >> v)) throw Error(path + " line " + std::to_string(lineno) + ": not a number");
    values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size()));
}

}  // namespace dgrom
