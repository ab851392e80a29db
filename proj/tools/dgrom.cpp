// Command-line driver. Built twice: the full tool, and an online-only variant compiled with
// DGROM_ONLINE_ONLY that only offers `online`.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef DGROM_ONLINE_ONLY
#include "dgrom/online.hpp"
#else
#include "dgrom/workflow.hpp"
#endif

namespace {

#ifndef DGROM_ONLINE_ONLY
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "configuration file (key = value lines)");
  app->add_option("--seed", c.seed, "override the sampling seed");
  app->add_option("--out", c.out, "override the output directory");
}

dgrom::RunConfig resolve(const Common& c) {
  dgrom::RunConfig cfg = c.config.empty() ? dgrom::RunConfig{} : dgrom::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

template <typename Fn>
int with_config(const Common& c, Fn&& fn) {
  try {
    return fn(resolve(c));
  } catch (const dgrom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dgrom::exit_invalid_input;
  }
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interior-penalty DG Stokes solver with a POD reduced-order model for a parametrized obstacle channel"};
  app.require_subcommand(1);
  int status = 0;

  dgrom::OnlineOptions online;
  auto* on = app.add_subcommand("online", "reduced solve from an offline archive");
  on->add_option("--archive", online.archive, "offline archive")->required();
  on->add_option("--mu", online.mu, "parameter x,y")->required();
  on->add_option("--n-basis", online.n_basis, "reduced basis size");
  on->add_option("--n-pressure", online.n_pressure, "pressure basis size (default: --n-basis)");
  on->add_option("--fom", online.fom_dir, "directory with fom_U.txt and fom_P.txt for error evaluation");
  on->add_option("--out", online.out_dir, "output directory");
  on->callback([&] { status = dgrom::cmd_online(online, std::cout); });

#ifndef DGROM_ONLINE_ONLY
  Common fc;
  dgrom::FomOptions fom;
  auto* f = app.add_subcommand("fom", "full-order solve at one parameter");
  add_common(f, fc);
  f->add_option("--mu", fom.mu, "parameter x,y (default 0.47,0.33)");
  f->add_flag("--export-system", fom.export_system, "also write the system in matrix-market form");
  f->callback([&] {
    status = with_config(fc, [&](const dgrom::RunConfig& c) { return dgrom::cmd_fom(c, fom, std::cout); });
  });

  Common oc;
  dgrom::OfflineOptions offline;
  auto* off = app.add_subcommand("offline", "affine decomposition, snapshots, POD and projection");
  add_common(off, oc);
  off->add_flag("--component-eigenvalues", offline.component_eigenvalues,
                "write x/y velocity eigenvalues instead of the joint ones");
  off->callback([&] {
    status = with_config(oc, [&](const dgrom::RunConfig& c) { return dgrom::cmd_offline(c, offline, std::cout); });
  });

  Common rc;
  std::string report_archive;
  auto* rep = app.add_subcommand("report", "error-vs-N and timing tables over the test set");
  add_common(rep, rc);
  rep->add_option("--archive", report_archive, "offline archive (default: <output_dir>/offline.dgrom)");
  rep->callback([&] {
    status = with_config(rc, [&](const dgrom::RunConfig& c) { return dgrom::cmd_report(c, report_archive, std::cout); });
  });

  Common ac;
  std::vector<std::string> affine_mu;
  auto* va = app.add_subcommand("validate-affine", "compare the affine expansion with direct assembly");
  add_common(va, ac);
  va->add_option("--mu", affine_mu, "parameter x,y (repeatable; default mu_bar)");
  va->callback([&] {
    status = with_config(ac, [&](const dgrom::RunConfig& c) { return dgrom::cmd_validate_affine(c, affine_mu, std::cout); });
  });

  Common vc;
  auto* vf = app.add_subcommand("validate-fom", "Poiseuille flow in the obstacle-free channel");
  add_common(vf, vc);
  vf->callback([&] {
    status = with_config(vc, [&](const dgrom::RunConfig& c) { return dgrom::cmd_validate_fom(c, std::cout); });
  });
#endif

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dgrom::exit_invalid_input;
  }
  return status;
}
