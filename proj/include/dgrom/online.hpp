#pragma once

// Online phase: everything here works from an offline archive alone and compiles with
// DGROM_ONLINE_ONLY defined.

#include <filesystem>
#include <ostream>
#include <string>

#include "dgrom/archive.hpp"
#include "dgrom/io.hpp"
#include "dgrom/reduced.hpp"

namespace dgrom {

enum ExitCode : int {
  exit_ok = 0,
  exit_invalid_input = 1,
  exit_failure = 2,
  exit_missing_archive = 3,
  exit_basis_too_large = 4,
};

/// Parses "x,y" and checks it against the box.
inline ParameterTuple parse_mu(const std::string& text, const ParameterBox& box) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    std::size_t p1 = 0, p2 = 0;
    const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
    const double x = std::stod(xs, &p1), y = std::stod(ys, &p2);
    if (p1 != xs.size() || p2 != ys.size()) throw std::invalid_argument(text);
    return ParameterTuple(x, y, box);
  } catch (const std::logic_error&) {
    throw InputError("parameter '" + text + "' is not of the form x,y");
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

inline std::string archive_path(const RunConfig& c) { return (std::filesystem::path(c.output_dir) / "offline.dgrom").string(); }

inline OfflineArchive open_archive(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ArchiveError("archive " + path + " does not exist");
  return load_archive(path);
}

/// Runs `body` and maps exceptions to exit codes, logging the message.
template <typename Fn>
int guarded(std::ostream& log, Fn&& body) {
  try {
    return body();
  } catch (const BasisSizeError& e) {
    log << "error: " << e.what() << "\n";
    return exit_basis_too_large;
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return exit_invalid_input;
  } catch (const ArchiveError& e) {
    log << "error: " << e.what() << "\n";
    return std::string(e.what()).find("does not exist") != std::string::npos ? exit_missing_archive : exit_invalid_input;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

struct OnlineOptions {
  std::string archive;
  std::string mu;           // "x,y"
  Index n_basis = 10;
  Index n_pressure = 0;     // 0: same as n_basis
  std::string fom_dir;      // directory holding fom_U.txt and fom_P.txt
  std::string out_dir;      // default: the archived output_dir
  bool vtk = true;
};

struct OnlineResult {
  ReducedSolution solution;
  Vector U, P;
  double t_assemble = 0.0, t_solve = 0.0;
  bool has_errors = false;
  RelativeErrors errors;
};

inline OnlineResult run_online(const OfflineArchive& a, const ParameterTuple& mu, Index n_v, Index n_p) {
  if (n_v == 0 || n_p == 0) throw InputError("basis size must be at least 1");
  OnlineResult r;
  Stopwatch sw;
  const ReducedSystem sys = assemble_reduced(a.reduced, a.reduced.evaluate_theta(build_maps(a.domain, mu)), n_v, n_p);
  r.t_assemble = sw.seconds();
  sw.restart();
  r.solution = solve_reduced(sys);
  r.t_solve = sw.seconds();
  r.U = reconstruct(a.velocity, r.solution.U_N);
  r.P = reconstruct(a.pressure, r.solution.P_N);
  return r;
}

inline int cmd_online(const OnlineOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    const OfflineArchive a = open_archive(o.archive);
    const ParameterTuple mu = parse_mu(o.mu, a.domain.box);
    const Index n_v = o.n_basis, n_p = o.n_pressure ? o.n_pressure : o.n_basis;
    if (n_v == 0) throw InputError("--n-basis must be at least 1");
    OnlineResult r = run_online(a, mu, n_v, n_p);
    const std::filesystem::path out = o.out_dir.empty() ? a.config.output_dir : o.out_dir;

    log << "online mu = (" << mu.x() << ", " << mu.y() << "), N_v = " << n_v << ", N_p = " << n_p << "\n";
    log << "reduced residual " << r.solution.residual << ", rcond " << r.solution.rcond << "\n";
    log << "online assemble " << r.t_assemble << " s, solve " << r.t_solve << " s\n";

    write_vector((out / "rom_U.txt").string(), r.U);
    write_vector((out / "rom_P.txt").string(), r.P);
    CsvWriter timing((out / "online_timing.csv").string(), {"mu_x", "mu_y", "N", "t_online_assemble", "t_online_solve"});
    timing.numbers({mu.x(), mu.y(), double(n_v), r.t_assemble, r.t_solve});

    std::vector<VtkField> fields{{"rb", r.U, r.P}};
    if (!o.fom_dir.empty()) {
      const Vector U = read_vector((std::filesystem::path(o.fom_dir) / "fom_U.txt").string());
      const Vector P = read_vector((std::filesystem::path(o.fom_dir) / "fom_P.txt").string());
      if (Index(U.size()) != a.dofs.n_u() || Index(P.size()) != a.dofs.n_p())
        throw InputError("full-order fields in " + o.fom_dir + " do not match the archive");
      r.errors = error_metrics(U, P, r.U, r.P, a.Mv, a.Mp);
      r.has_errors = true;
      log << "relative error velocity " << r.errors.velocity << ", pressure " << r.errors.pressure << "\n";
      CsvWriter err((out / "online_errors.csv").string(), {"N", "e_v", "e_p"});
      err.numbers({double(n_v), r.errors.velocity, r.errors.pressure});
      fields.push_back({"fom", U, P});
      fields.push_back({"abs_error", (U - r.U).cwiseAbs(), (P - r.P).cwiseAbs()});
    }
    if (o.vtk) {
      const Mesh physical = deform_mesh(a.mesh, build_maps(a.domain, mu));
      write_vtk((out / "rom.vtk").string(), physical, a.dofs, fields, "reduced solution");
    }
    return int(exit_ok);
  });
}

}  // namespace dgrom
