#pragma once

#ifdef DGROM_ONLINE_ONLY
#error "the offline workflow must not be included in an online-only build"
#endif

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "dgrom/affine.hpp"
#include "dgrom/config.hpp"
#include "dgrom/fom.hpp"
#include "dgrom/online.hpp"
#include "dgrom/pod.hpp"
#include "dgrom/sampling.hpp"

namespace dgrom {

/// A stage of the offline pipeline failed.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what) : Error("stage '" + stage + "' failed: " + what) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InputError&) {
    throw;
  } catch (const BasisSizeError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

/// Full-order discretization of a configuration.
struct Model {
  RunConfig config;
  DomainDescription domain;
  Mesh mesh;
  FacetList facets;
  DGSpace space;
  PhysicsConfig physics;
  AffineOperator affine;
  InnerProducts ip;
};

inline Model build_model(const RunConfig& c, Decomposition kind = Decomposition::obstacle_fan) {
  c.validate();
  Model m;
  m.config = c;
  m.domain = build_reference_domain(kind);
  if (kind == Decomposition::obstacle_fan) m.domain = with_reference(m.domain, c.mu_bar, c.param_box);
  m.mesh = generate_mesh(m.domain, c.refinement);
  m.facets = build_facets(m.mesh);
  m.space = build_space(m.mesh, c.degree);
  m.physics = physics_for(c, m.mesh.min_edge_length());
  m.affine = decompose(m.mesh, m.facets, m.space, m.physics, m.domain, c.alpha_scaling);
  m.ip = assemble_inner_products(m.mesh, m.space);
  return m;
}

inline StokesSystem assemble_at(const Model& m, const ParameterTuple& mu) {
  return m.affine.assemble(m.affine.evaluate_theta(build_maps(m.domain, mu)));
}

inline void log_dofs(std::ostream& log, const DofMap& d) {
  log << "elements " << d.n_elements << ", N_u = " << d.n_u() << ", N_p = " << d.n_p()
      << ", N_u/N_p = " << double(d.n_u()) / double(d.n_p()) << "\n";
}

// ---------------------------------------------------------------------------------------------
// fom

struct FomOptions {
  std::string mu;
  std::string out_dir;  // default: config output_dir
  bool export_system = false;
};

inline int cmd_fom(const RunConfig& c, const FomOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    const ParameterTuple mu = parse_mu(o.mu.empty() ? "0.47,0.33" : o.mu, c.param_box);
    const std::filesystem::path out = o.out_dir.empty() ? c.output_dir : o.out_dir;
    const Model m = stage("discretization", [&] { return build_model(c); });
    log_dofs(log, m.space.dofs);
    Stopwatch sw;
    const StokesSystem sys = assemble_at(m, mu);
    const double t_assemble = sw.seconds();
    sw.restart();
    const StokesSolution sol = stage("solve", [&] { return solve_stokes(sys); });
    const double t_solve = sw.seconds();
    log << "fom mu = (" << mu.x() << ", " << mu.y() << "), residual " << sol.residual << ", assemble " << t_assemble
        << " s, solve " << t_solve << " s\n";

    write_vector((out / "fom_U.txt").string(), sol.U);
    write_vector((out / "fom_P.txt").string(), sol.P);
    const Mesh physical = deform_mesh(m.mesh, build_maps(m.domain, mu));
    write_vtk((out / "fom.vtk").string(), physical, m.space.dofs, {{"dg", sol.U, sol.P}}, "full-order solution");
    {
      auto f = open_output((out / "fom.log").string());
      f << "mu " << format_number(mu.x()) << " " << format_number(mu.y()) << "\n";
      f << "N_u " << m.space.dofs.n_u() << "\nN_p " << m.space.dofs.n_p() << "\n";
      f << "C11 " << format_number(m.physics.c11) << "\n";
      f << "residual " << format_number(sol.residual) << "\n";
      f << "t_assemble " << format_number(t_assemble) << "\nt_solve " << format_number(t_solve) << "\n";
    }
    if (o.export_system) {
      write_matrix_market((out / "A.mtx").string(), sys.A);
      write_matrix_market((out / "B.mtx").string(), sys.B);
      write_vector((out / "F1.txt").string(), sys.F1);
      write_vector((out / "F2.txt").string(), sys.F2);
      write_mesh_text((out / "mesh.txt").string(), physical);
    }
    return int(exit_ok);
  });
}

// ---------------------------------------------------------------------------------------------
// validate-fom

struct PoiseuilleResult {
  double velocity_error = 0.0, pressure_error = 0.0, residual = 0.0, seconds = 0.0;
  Index n_u = 0, n_p = 0;
};

/// Obstacle-free channel with the parabolic inflow; the exact solution u = (y(1-y), 0),
/// p = 2 nu (1-x) lies in the discrete space.
inline PoiseuilleResult poiseuille_check(const RunConfig& c) {
  Stopwatch sw;
  const DomainDescription d = build_reference_domain(Decomposition::channel);
  const Mesh mesh = generate_mesh(d, c.refinement);
  const FacetList facets = build_facets(mesh);
  const DGSpace space = build_space(mesh, c.degree);
  const PhysicsConfig phys = physics_for(c, mesh.min_edge_length());
  const StokesSolution sol = solve_stokes(assemble_system(mesh, facets, space, phys));
  const InnerProducts ip = assemble_inner_products(mesh, space);
  const double nu = c.nu;
  const Vector U = interpolate_velocity([](const Vec2& x) { return Vec2(x.y() * (1.0 - x.y()), 0.0); }, mesh, space.dofs);
  const Vector P = interpolate_pressure([nu](const Vec2& x) { return 2.0 * nu * (1.0 - x.x()); }, mesh, space.dofs);
  const RelativeErrors e = error_metrics(U, P, sol.U, sol.P, ip.velocity, ip.pressure);
  return {e.velocity, e.pressure, sol.residual, sw.seconds(), space.dofs.n_u(), space.dofs.n_p()};
}

inline int cmd_validate_fom(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    const PoiseuilleResult r = stage("poiseuille", [&] { return poiseuille_check(c); });
    log << "poiseuille N_u = " << r.n_u << ", N_p = " << r.n_p << ", residual " << r.residual << "\n";
    log << "relative velocity error " << r.velocity_error << ", pressure error " << r.pressure_error << " ("
        << r.seconds << " s)\n";
    const bool ok = r.velocity_error <= 1e-8 && r.pressure_error <= 1e-8;
    log << (ok ? "poiseuille check passed\n" : "poiseuille check FAILED (tolerance 1e-8)\n");
    return int(ok ? exit_ok : exit_failure);
  });
}

// ---------------------------------------------------------------------------------------------
// validate-affine

inline int cmd_validate_affine(const RunConfig& c, const std::vector<std::string>& mus, std::ostream& log) {
  return guarded(log, [&] {
    std::vector<ParameterTuple> params;
    for (const auto& s : mus) params.push_back(parse_mu(s, c.param_box));
    if (params.empty()) params.push_back(ParameterTuple(c.mu_bar, c.param_box));
    const Model m = stage("discretization", [&] { return build_model(c); });
    log << "affine terms " << m.affine.size() << ", Q_a = " << m.affine.q_a() << "\n";
    bool ok = true;
    for (const auto& mu : params) {
      log << "mu = (" << mu.x() << ", " << mu.y() << ")\n";
      for (const auto& t : check_affine_against_direct(m.affine, m.domain, m.mesh, m.space, m.physics, mu)) {
        log << "  " << to_string(t.term) << " " << t.error << " (tol " << t.tolerance << ")"
            << (t.passed() ? "" : " FAILED") << "\n";
        ok = ok && t.passed();
      }
    }
    return int(ok ? exit_ok : exit_failure);
  });
}

// ---------------------------------------------------------------------------------------------
// offline

struct OfflineOptions {
  bool component_eigenvalues = false;  // theta_vx / theta_vy columns instead of joint velocity
};

struct OfflineResult {
  OfflineArchive archive;
  SnapshotSet snapshots;
  std::string archive_path;
  Vector vx_eigenvalues, vy_eigenvalues;
};

/// Eigenvalues of the POD restricted to one velocity component.
inline Vector component_eigenvalues(const Matrix& S_v, const SpMat& Mv, const DofMap& d, int comp) {
  std::vector<Index> rows;
  for (Index e = 0; e < d.n_elements; ++e)
    for (Index i = 0; i < d.m_velocity; ++i) rows.push_back(d.velocity(e, comp, i));
  std::vector<Eigen::Index> map(Mv.rows(), -1);
  for (Index k = 0; k < rows.size(); ++k) map[rows[k]] = Eigen::Index(k);
  Triplets t;
  for (Eigen::Index col = 0; col < Mv.outerSize(); ++col)
    for (SpMat::InnerIterator it(Mv, col); it; ++it)
      if (map[it.row()] >= 0 && map[it.col()] >= 0) t.emplace_back(map[it.row()], map[it.col()], it.value());
  const SpMat M = from_triplets(rows.size(), rows.size(), t);
  Matrix S(Eigen::Index(rows.size()), S_v.cols());
  for (Index k = 0; k < rows.size(); ++k) S.row(Eigen::Index(k)) = S_v.row(Eigen::Index(rows[k]));
  return pod(S, M).eigenvalues;
}

inline void write_eigenvalues(const std::string& path, const OfflineResult& r, bool components) {
  CsvWriter csv(path, {"index", "theta_vx", "theta_vy_or_joint", "theta_p"});
  const Vector& joint = r.archive.velocity.eigenvalues;
  const Vector& p = r.archive.pressure.eigenvalues;
  for (Eigen::Index i = 0; i < joint.size(); ++i) {
    if (components)
      csv.row({std::to_string(i + 1), format_number(r.vx_eigenvalues[i]), format_number(r.vy_eigenvalues[i]),
               format_number(p[i])});
    else
      csv.row({std::to_string(i + 1), "", format_number(joint[i]), format_number(p[i])});
  }
}

inline OfflineResult run_offline(const RunConfig& c, const OfflineOptions& o, std::ostream& log) {
  OfflineResult r;
  Stopwatch total;
  Model m = stage("discretization", [&] { return build_model(c); });
  log_dofs(log, m.space.dofs);
  log << "affine terms " << m.affine.size() << ", Q_a = " << m.affine.q_a() << " (" << total.seconds() << " s)\n";

  const auto mus = training_parameters(c.param_box, c.seed, c.n_snapshots);
  Stopwatch sw;
  r.snapshots = stage("snapshots", [&] { return collect_snapshots(m.affine, m.domain, mus); });
  log << c.n_snapshots << " snapshots (seed " << c.seed << ") in " << sw.seconds() << " s\n";

  PodOptions po;
  po.energy_tol = c.pod_tol;
  auto& a = r.archive;
  a.velocity = stage("velocity POD", [&] { return pod(r.snapshots.S_v, m.ip.velocity, po); });
  a.pressure = stage("pressure POD", [&] { return pod(r.snapshots.S_p, m.ip.pressure, po); });
  log << "POD: velocity rank " << a.velocity.rank << " (kept " << a.velocity.size() << "), pressure rank "
      << a.pressure.rank << " (kept " << a.pressure.size() << ")\n";
  if (o.component_eigenvalues) {
    r.vx_eigenvalues = stage("component POD", [&] { return component_eigenvalues(r.snapshots.S_v, m.ip.velocity, m.space.dofs, 0); });
    r.vy_eigenvalues = stage("component POD", [&] { return component_eigenvalues(r.snapshots.S_v, m.ip.velocity, m.space.dofs, 1); });
  }

  a.reduced = stage("projection", [&] { return project_operator(m.affine, a.velocity, a.pressure); });
  a.config = c;
  a.domain = m.domain;
  a.mesh = m.mesh;
  a.dofs = m.space.dofs;
  a.c11 = m.physics.c11;
  a.affine = std::move(m.affine);
  a.Mv = m.ip.velocity;
  a.Mp = m.ip.pressure;
  for (const auto& mu : mus) a.training_mu.push_back(mu.value());

  const std::filesystem::path out = c.output_dir;
  r.archive_path = archive_path(c);
  stage("archive", [&] {
    save_archive(a, r.archive_path);
    write_eigenvalues((out / "eigenvalues.csv").string(), r, o.component_eigenvalues);
    CsvWriter tp((out / "training_parameters.csv").string(), {"index", "mu_x", "mu_y", "seed"});
    for (Index j = 0; j < mus.size(); ++j)
      tp.row({std::to_string(j), format_number(mus[j].x()), format_number(mus[j].y()), std::to_string(c.seed)});
    open_output((out / "config.txt").string()) << to_text(c);
    return 0;
  });
  log << "offline phase done in " << total.seconds() << " s, archive " << r.archive_path << "\n";
  return r;
}

inline int cmd_offline(const RunConfig& c, const OfflineOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    run_offline(c, o, log);
    return int(exit_ok);
  });
}

// ---------------------------------------------------------------------------------------------
// report

inline constexpr double reference_speedup = 20.6;

struct ReportRow {
  Vec2 mu;
  std::vector<RelativeErrors> errors;  // per entry of n_list
  double t_fom_assemble = 0.0, t_fom_solve = 0.0, t_online_assemble = 0.0, t_online_solve = 0.0;
  double speedup = 0.0;
};

struct ReportResult {
  std::vector<Index> n_list;
  std::vector<double> mean_ev, max_ev, mean_ep, max_ep;
  std::vector<ReportRow> rows;
  std::vector<std::string> failures;  // reduced solves that raised
  Index timing_n = 0;
  double mean_speedup = 0.0;
};

/// Online cost averaged over repetitions until at least `min_seconds` have elapsed.
inline std::pair<double, double> time_online(const OfflineArchive& a, const MapSet& ms, Index n, double min_seconds = 2e-3) {
  double ta = 0.0, ts = 0.0;
  Index reps = 0;
  Stopwatch total;
  do {
    Stopwatch sw;
    const ReducedSystem sys = assemble_reduced(a.reduced, a.reduced.evaluate_theta(ms), n, n);
    ta += sw.seconds();
    sw.restart();
    const ReducedSolution sol = solve_reduced(sys);
    ts += sw.seconds();
    ++reps;
    if (!sol.U_N.allFinite()) throw Error("non-finite reduced solution");
  } while (total.seconds() < min_seconds && reps < 10000);
  return {ta / double(reps), ts / double(reps)};
}

inline ReportResult run_report(const OfflineArchive& a, const RunConfig& c, std::ostream& log) {
  ReportResult r;
  r.n_list = c.n_basis_list;
  const Index stored = std::min(a.velocity.size(), a.pressure.size());
  for (Index n : r.n_list)
    if (n > stored) throw BasisSizeError("n_basis_list entry " + std::to_string(n) + " exceeds the stored basis", stored);
  r.timing_n = std::min<Index>(10, stored);
  const auto tests = test_parameters(a.domain.box, a.config.seed, c.n_test);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (Index t = 0; t < tests.size(); ++t) {
    const ParameterTuple& mu = tests[t];
    ReportRow row;
    row.mu = mu.value();
    const MapSet ms = build_maps(a.domain, mu);
    Stopwatch sw;
    const StokesSystem sys = a.affine.assemble(a.affine.evaluate_theta(ms));
    row.t_fom_assemble = sw.seconds();
    sw.restart();
    const StokesSolution fom = stage("full-order solve", [&] { return solve_stokes(sys); });
    row.t_fom_solve = sw.seconds();

    for (Index n : r.n_list) {
      try {
        const ReducedSolution s = solve_reduced(assemble_reduced(a.reduced, a.reduced.evaluate_theta(ms), n, n));
        row.errors.push_back(error_metrics(fom.U, fom.P, reconstruct(a.velocity, s.U_N), reconstruct(a.pressure, s.P_N), a.Mv, a.Mp));
      } catch (const BasisSizeError&) {
        throw;
      } catch (const Error& e) {
        r.failures.push_back("test " + std::to_string(t) + ", N = " + std::to_string(n) + ": " + e.what());
        row.errors.push_back({nan, nan});
      }
    }
    try {
      std::tie(row.t_online_assemble, row.t_online_solve) = time_online(a, ms, r.timing_n);
      row.speedup = (row.t_fom_assemble + row.t_fom_solve) / (row.t_online_assemble + row.t_online_solve);
    } catch (const Error& e) {
      r.failures.push_back("timing at test " + std::to_string(t) + ": " + e.what());
      row.t_online_assemble = row.t_online_solve = row.speedup = nan;
    }
    r.rows.push_back(std::move(row));
  }

  for (Index k = 0; k < r.n_list.size(); ++k) {
    double sv = 0.0, sp = 0.0, mv = 0.0, mp = 0.0;
    for (const auto& row : r.rows) {
      const auto& e = row.errors[k];
      sv += e.velocity;
      sp += e.pressure;
      mv = std::isnan(e.velocity) || std::isnan(mv) ? nan : std::max(mv, e.velocity);
      mp = std::isnan(e.pressure) || std::isnan(mp) ? nan : std::max(mp, e.pressure);
    }
    const double n = double(std::max<Index>(1, r.rows.size()));
    r.mean_ev.push_back(sv / n);
    r.max_ev.push_back(mv);
    r.mean_ep.push_back(sp / n);
    r.max_ep.push_back(mp);
  }
  double s = 0.0;
  for (const auto& row : r.rows) s += row.speedup;
  r.mean_speedup = r.rows.empty() ? nan : s / double(r.rows.size());

  const std::filesystem::path out = c.output_dir;
  CsvWriter err((out / "errors.csv").string(), {"N", "mean_ev", "max_ev", "mean_ep", "max_ep"});
  for (Index k = 0; k < r.n_list.size(); ++k)
    err.row({std::to_string(r.n_list[k]), format_number(r.mean_ev[k]), format_number(r.max_ev[k]),
             format_number(r.mean_ep[k]), format_number(r.max_ep[k])});
  CsvWriter tim((out / "timings.csv").string(),
                {"mu_x", "mu_y", "t_fom_assemble", "t_fom_solve", "t_online_assemble", "t_online_solve", "speedup"});
  for (const auto& row : r.rows)
    tim.numbers({row.mu.x(), row.mu.y(), row.t_fom_assemble, row.t_fom_solve, row.t_online_assemble,
                 row.t_online_solve, row.speedup});
  CsvWriter tp((out / "test_parameters.csv").string(), {"index", "mu_x", "mu_y", "seed"});
  for (Index t = 0; t < tests.size(); ++t)
    tp.row({std::to_string(t), format_number(tests[t].x()), format_number(tests[t].y()), std::to_string(a.config.seed + 1)});
  {
    auto gp = open_output((out / "plots.gp").string());
    gp << "set datafile separator ','\nset logscale y\nset key top right\n"
          "set terminal pngcairo size 800,600\n"
          "set output 'errors.png'\nset xlabel 'N'\nset ylabel 'mean relative error'\n"
          "plot 'errors.csv' every ::1 using 1:2 with linespoints title 'velocity', \\\n"
          "     'errors.csv' every ::1 using 1:4 with linespoints title 'pressure'\n"
          "set output 'eigenvalues.png'\nset xlabel 'index'\nset ylabel 'eigenvalue'\n"
          "plot 'eigenvalues.csv' every ::1 using 1:3 with linespoints title 'velocity', \\\n"
          "     'eigenvalues.csv' every ::1 using 1:4 with linespoints title 'pressure'\n";
  }

  log << "report over " << r.rows.size() << " test parameters (seed " << a.config.seed + 1 << ")\n";
  for (Index k = 0; k < r.n_list.size(); ++k)
    log << "  N = " << r.n_list[k] << ": mean e_v " << r.mean_ev[k] << ", mean e_p " << r.mean_ep[k] << "\n";
  for (const auto& f : r.failures) log << "  reduced solve failed: " << f << "\n";
  log << "average speedup at N = " << r.timing_n << ": " << r.mean_speedup << " (reference value " << reference_speedup
      << ")\n";
  {
    auto f = open_output((out / "report.txt").string());
    f << "test_parameters " << r.rows.size() << "\nseed " << a.config.seed + 1 << "\n";
    f << "timing_N " << r.timing_n << "\naverage_speedup " << format_number(r.mean_speedup) << "\n";
    f << "reference_speedup " << reference_speedup << "\n";
    f << "reduced_solve_failures " << r.failures.size() << "\n";
  }
  return r;
}

inline int cmd_report(const RunConfig& c, const std::string& archive, std::ostream& log) {
  return guarded(log, [&] {
    const OfflineArchive a = open_archive(archive.empty() ? archive_path(c) : archive);
    run_report(a, c, log);
    return int(exit_ok);
  });
}

}  // namespace dgrom
