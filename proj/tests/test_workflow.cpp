#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "dgrom/workflow.hpp"

using namespace dgrom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("dgrom_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.refinement = 1;
  c.n_snapshots = 12;
  c.n_test = 3;
  c.n_basis_list = {1, 2, 3, 4};
  c.output_dir = out.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(parse_config(to_text(c)), c);
  EXPECT_EQ(parse_config(""), c);
}

TEST(Config, ValuesAndRanges) {
  const RunConfig c = parse_config(
      "# comment\n"
      "nu = 0.5\n"
      "c11_mode = constant   # trailing comment\n"
      "c11_value = 40\n"
      "refinement = 2\n"
      "mu_bar = 0.45, 0.35\n"
      "n_basis_list = 1-3, 7, 10-11\n"
      "alpha_scaling = true\n"
      "seed = 7\n");
  EXPECT_EQ(c.nu, 0.5);
  EXPECT_EQ(c.c11_mode, PenaltyMode::constant);
  EXPECT_EQ(c.c11_value, 40.0);
  EXPECT_EQ(c.refinement, 2);
  EXPECT_EQ(c.mu_bar, Vec2(0.45, 0.35));
  EXPECT_EQ(c.n_basis_list, (std::vector<Index>{1, 2, 3, 7, 10, 11}));
  EXPECT_TRUE(c.alpha_scaling);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(parse_config(to_text(c)), c);
}

TEST(Config, ErrorsNameLineAndKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("nu = 1\nfoo = 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("nu = 1\nfoo = 2\n").find("'foo'"), std::string::npos);
  EXPECT_NE(message("nu = 1\nnu = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("degree = two\n").find("'degree'"), std::string::npos);
  EXPECT_NE(message("mu_bar = 0.5\n").find("'mu_bar'"), std::string::npos);
  EXPECT_NE(message("nu\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("nu = -1\n").find("nu must be positive"), std::string::npos);
  EXPECT_NE(message("mu_bar = 0.9, 0.3\n").find("outside"), std::string::npos);
  EXPECT_NE(message("n_basis_list = 0\n").find("at least 1"), std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/dgrom.cfg"), InputError);
}

TEST(Io, VectorRoundTripIsBitExact) {
  const fs::path dir = scratch("io");
  Vector v(5);
  v << 1.0 / 3.0, -2e-300, 0.0, 1e17 + 1.0, std::nextafter(1.0, 2.0);
  write_vector((dir / "v.txt").string(), v);
  const Vector w = read_vector((dir / "v.txt").string());
  ASSERT_EQ(w.size(), v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) EXPECT_EQ(w[i], v[i]);
  EXPECT_THROW(read_vector((dir / "missing.txt").string()), Error);
}

TEST(Io, CsvRejectsRaggedRows) {
  const fs::path dir = scratch("csv");
  CsvWriter csv((dir / "a.csv").string(), {"a", "b"});
  csv.numbers({1.5, 2.0});
  EXPECT_THROW(csv.row({"1"}), Error);
}

TEST(Io, VtkCountsMatchTheMesh) {
  const fs::path dir = scratch("vtk");
  const Mesh m = generate_mesh(build_reference_domain(), 0);
  const DofMap d = build_dofmap(m, 2);
  write_vtk((dir / "f.vtk").string(), m, d, {{"fom", Vector::Ones(d.n_u()), Vector::Zero(d.n_p())}});
  std::ifstream in(dir / "f.vtk");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  auto has = [&](const std::string& s) { return std::find(lines.begin(), lines.end(), s) != lines.end(); };
  EXPECT_TRUE(has("POINTS 54 double"));  // 9 elements x 6 lattice points
  EXPECT_TRUE(has("CELLS 36 144"));      // 4 sub-triangles each
  EXPECT_TRUE(has("SCALARS fom_u_x double 1"));
  EXPECT_TRUE(has("SCALARS fom_p double 1"));
  EXPECT_TRUE(has("VECTORS fom_velocity double"));
  EXPECT_THROW(write_vtk((dir / "g.vtk").string(), m, d, {{"bad", Vector::Ones(3), Vector::Zero(d.n_p())}}), Error);
}

TEST(Online, ParameterParsing) {
  const ParameterBox box;
  EXPECT_EQ(parse_mu("0.45,0.25", box).value(), Vec2(0.45, 0.25));
  EXPECT_THROW(parse_mu("0.45", box), InputError);
  EXPECT_THROW(parse_mu("0.45,abc", box), InputError);
  EXPECT_THROW(parse_mu("0.45,0.25x", box), InputError);
  EXPECT_THROW(parse_mu("0.9,0.3", box), InputError);
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("pipeline"));
    config_ = new RunConfig(small_config(*dir_));
    std::ostringstream log;
    result_ = new OfflineResult(run_offline(*config_, {}, log));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete config_;
    delete dir_;
  }
  static fs::path* dir_;
  static RunConfig* config_;
  static OfflineResult* result_;
};
fs::path* Pipeline::dir_ = nullptr;
RunConfig* Pipeline::config_ = nullptr;
OfflineResult* Pipeline::result_ = nullptr;

TEST_F(Pipeline, OfflineWritesItsArtifacts) {
  for (const char* f : {"offline.dgrom", "eigenvalues.csv", "training_parameters.csv", "config.txt"})
    EXPECT_TRUE(fs::exists(*dir_ / f)) << f;
  EXPECT_EQ(load_config((*dir_ / "config.txt").string()), *config_);
  const std::string tp = slurp(*dir_ / "training_parameters.csv");
  EXPECT_EQ(std::count(tp.begin(), tp.end(), '\n'), 13);
  EXPECT_NE(tp.find(",42\n"), std::string::npos);
}

TEST_F(Pipeline, ArchiveRoundTrip) {
  const OfflineArchive& a = result_->archive;
  const OfflineArchive b = load_archive(archive_path(*config_));
  EXPECT_EQ(b.config, a.config);
  EXPECT_EQ(b.mesh.vertices, a.mesh.vertices);
  EXPECT_EQ(b.mesh.elements, a.mesh.elements);
  EXPECT_EQ(b.dofs.n_u(), a.dofs.n_u());
  EXPECT_EQ(b.c11, a.c11);
  EXPECT_EQ(b.velocity.B, a.velocity.B);
  EXPECT_EQ(b.pressure.eigenvalues, a.pressure.eigenvalues);
  EXPECT_EQ(b.velocity.rank, a.velocity.rank);
  ASSERT_EQ(b.reduced.blocks.size(), a.reduced.blocks.size());
  for (Index i = 0; i < a.reduced.blocks.size(); ++i) {
    EXPECT_EQ(b.reduced.blocks[i], a.reduced.blocks[i]);
    EXPECT_EQ(b.reduced.recipes[i], a.reduced.recipes[i]);
    EXPECT_EQ(b.reduced.terms[i], a.reduced.terms[i]);
  }
  EXPECT_EQ(b.affine.size(), a.affine.size());
  EXPECT_EQ(SpMat(b.Mv - a.Mv).norm(), 0.0);
  EXPECT_EQ(b.training_mu, a.training_mu);

  const ParameterTuple mu(0.52, 0.27);
  const OnlineResult r1 = run_online(a, mu, 3, 3), r2 = run_online(b, mu, 3, 3);
  EXPECT_EQ(r1.U, r2.U);
  EXPECT_EQ(r1.P, r2.P);
  // The archived full-order operator reproduces the live one.
  const StokesSystem s1 = a.affine.assemble(a.affine.evaluate_theta(build_maps(a.domain, mu)));
  const StokesSystem s2 = b.affine.assemble(b.affine.evaluate_theta(build_maps(b.domain, mu)));
  EXPECT_EQ(SpMat(s1.A - s2.A).norm(), 0.0);
  EXPECT_EQ(s1.F1, s2.F1);
}

TEST_F(Pipeline, CorruptArchiveRejected) {
  const fs::path bad = *dir_ / "bad.dgrom";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTANARCHIVE";
  }
  EXPECT_THROW(load_archive(bad.string()), ArchiveError);
  const std::string good = slurp(archive_path(*config_));
  {
    std::ofstream out(bad, std::ios::binary);
    out << good.substr(0, good.size() / 2);
  }
  EXPECT_THROW(load_archive(bad.string()), ArchiveError);
}

TEST_F(Pipeline, OnlineExitCodes) {
  std::ostringstream log;
  OnlineOptions o;
  o.archive = archive_path(*config_);
  o.mu = "0.5,0.3";
  o.n_basis = 2;
  o.out_dir = (*dir_ / "online").string();
  EXPECT_EQ(cmd_online(o, log), exit_ok) << log.str();
  EXPECT_TRUE(fs::exists(*dir_ / "online" / "rom_U.txt"));
  EXPECT_TRUE(fs::exists(*dir_ / "online" / "rom.vtk"));

  OnlineOptions missing = o;
  missing.archive = (*dir_ / "nothing.dgrom").string();
  EXPECT_EQ(cmd_online(missing, log), exit_missing_archive);

  OnlineOptions outside = o;
  outside.mu = "0.7,0.3";
  EXPECT_EQ(cmd_online(outside, log), exit_invalid_input);

  OnlineOptions large = o;
  large.n_basis = result_->archive.velocity.size() + 1;
  EXPECT_EQ(cmd_online(large, log), exit_basis_too_large);
  EXPECT_NE(log.str().find("usable maximum is " + std::to_string(result_->archive.velocity.size())), std::string::npos);

  OnlineOptions zero = o;
  zero.n_basis = 0;
  EXPECT_EQ(cmd_online(zero, log), exit_invalid_input);
}

TEST_F(Pipeline, OnlineErrorsAgainstStoredFullOrderSolution) {
  std::ostringstream log;
  const fs::path fom_dir = *dir_ / "fom";
  RunConfig c = *config_;
  c.output_dir = fom_dir.string();
  FomOptions fo;
  fo.mu = "0.45,0.35";
  ASSERT_EQ(cmd_fom(c, fo, log), exit_ok) << log.str();
  OnlineOptions o;
  o.archive = archive_path(*config_);
  o.mu = fo.mu;
  o.n_basis = 4;
  o.fom_dir = fom_dir.string();
  o.out_dir = (*dir_ / "online_err").string();
  ASSERT_EQ(cmd_online(o, log), exit_ok) << log.str();
  const std::string csv = slurp(*dir_ / "online_err" / "online_errors.csv");
  EXPECT_EQ(csv.rfind("N,e_v,e_p\n4,", 0), 0u) << csv;
}

TEST_F(Pipeline, ReportIsDeterministic) {
  RunConfig c = *config_;
  std::ostringstream log;
  const ReportResult r1 = run_report(result_->archive, c, log);
  const std::string e1 = slurp(*dir_ / "errors.csv"), t1 = slurp(*dir_ / "test_parameters.csv");
  const ReportResult r2 = run_report(load_archive(archive_path(c)), c, log);
  EXPECT_EQ(slurp(*dir_ / "errors.csv"), e1);
  EXPECT_EQ(slurp(*dir_ / "test_parameters.csv"), t1);
  EXPECT_EQ(r1.rows.size(), 3u);
  EXPECT_EQ(r1.mean_ev.size(), 4u);
  EXPECT_NE(t1.find(",43\n"), std::string::npos);
  for (const char* f : {"timings.csv", "plots.gp", "report.txt"}) EXPECT_TRUE(fs::exists(*dir_ / f)) << f;

  c.n_basis_list = {result_->archive.velocity.size() + 1};
  EXPECT_THROW(run_report(result_->archive, c, log), BasisSizeError);
}

TEST_F(Pipeline, ValidationCommands) {
  std::ostringstream log;
  RunConfig c = *config_;
  c.output_dir = (*dir_ / "validate").string();
  EXPECT_EQ(cmd_validate_fom(c, log), exit_ok) << log.str();
  EXPECT_EQ(cmd_validate_affine(c, {"0.41,0.22", "0.6,0.4"}, log), exit_ok) << log.str();
  EXPECT_EQ(cmd_validate_affine(c, {"0.61,0.22"}, log), exit_invalid_input);
}

TEST(Stage, ErrorsNameTheStage) {
  try {
    stage("snapshots", [] { throw Error("boom"); return 0; });
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(std::string(e.what()), "stage 'snapshots' failed: boom");
  }
}
