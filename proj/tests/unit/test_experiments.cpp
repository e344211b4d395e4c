#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "stokesreg/experiments.hpp"

using namespace stokesreg;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("stokesreg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + STOKESREG_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ResultCsv, HeaderAndEmptyOrders) {
  EXPECT_EQ(split(kResultHeader).size(), 13u);
  auto r = make_row("layer-sum", "velocity", "sphere", 0.0625, 3.0, "new", 1e-3, 5e-4);
  r.node_count = 10;
  const auto cells = split(csv_line(r));
  ASSERT_EQ(cells.size(), 13u);
  EXPECT_EQ(cells[8], "");
  EXPECT_EQ(cells[9], "");
  EXPECT_EQ(cells[10], "10");
}

TEST(ResultTable, ObservedOrderPerSeries) {
  std::ostringstream csv;
  ResultTable table(&csv, true);
  auto first = make_row("layer-sum", "velocity", "sphere", 0.1, 3.0, "new", 1e-2, 4e-3);
  first.wall_time = 12.5;
  table.add(first);
  table.add(make_row("layer-sum", "velocity", "sphere", 0.1, 3.0, "original", 5e-2, 4e-3));
  table.add(make_row("layer-sum", "velocity", "sphere", 0.05, 3.0, "new", 1.25e-3, 1e-3));
  table.add(make_row("layer-sum", "velocity", "sphere", 0.025, 3.0, "new", 0.0, 2.5e-4));
  const auto& rows = table.rows();
  EXPECT_FALSE(rows[0].observed_order);
  EXPECT_EQ(rows[0].wall_time, 0.0);
  EXPECT_FALSE(rows[1].observed_order);
  ASSERT_TRUE(rows[2].observed_order);
  EXPECT_NEAR(*rows[2].observed_order, 3.0, 1e-12);
  EXPECT_NEAR(*rows[2].observed_order_l2, 2.0, 1e-12);
  EXPECT_FALSE(rows[3].observed_order);
  EXPECT_NEAR(*rows[3].observed_order_l2, 2.0, 1e-12);
  const auto ls = lines(csv.str());
  ASSERT_EQ(ls.size(), 5u);
  EXPECT_EQ(ls[0], kResultHeader);
  EXPECT_EQ(split(ls[3])[8], "3.0000");
}

TEST(ExactArea, SphereAndEllipsoid) {
  SurfaceSpec sphere;
  sphere.sphere_radius = 2.0;
  EXPECT_NEAR(exact_area(sphere), 16 * kPi, 1e-13);
  SurfaceSpec ell;
  ell.kind = SurfaceKind::ellipsoid;
  EXPECT_NEAR(exact_area(ell), oracle::ellipsoid_area_triangulated(1.0, 0.6, 0.4, 256), 1e-6);
  ell.ellipsoid_axes = {0.7, 0.7, 0.7};
  EXPECT_NEAR(exact_area(ell), 4 * kPi * 0.49, 1e-13);
  SurfaceSpec mol;
  mol.kind = SurfaceKind::molecule;
  EXPECT_TRUE(std::isnan(exact_area(mol)));
}

TEST(Moments, TableMatchesClosedForms) {
  const auto rows = moment_table();
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) EXPECT_NEAR(r.value, r.reference, 1e-12) << r.quantity;
  std::ostringstream out;
  write_moment_table(out, rows);
  const auto ls = lines(out.str());
  EXPECT_EQ(ls[0], "quantity,value,reference,difference");
  EXPECT_EQ(ls.size(), 9u);
}

TEST(Run, QuadratureRowsAndNodeTables) {
  const auto dir = scratch_dir("quadrature");
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::quadrature;
  cfg.surfaces.resize(1);
  cfg.h = {0.25, 0.125};
  cfg.nodes_output = (dir / "nodes").string();
  std::ostringstream csv;
  const auto result = run(cfg, &csv);
  ASSERT_EQ(result.rows.size(), 2u);
  EXPECT_LT(result.rows[1].norm_max, 1e-2);
  EXPECT_LT(result.rows[1].norm_max, result.rows[0].norm_max);
  EXPECT_GT(result.rows[1].node_count, result.rows[0].node_count);
  const auto ls = lines(slurp(dir / "nodes_sphere_h8.csv"));
  ASSERT_EQ(ls.size(), result.rows[1].node_count + 1);
  EXPECT_EQ(ls[0], "x,y,z,nx,ny,nz,weight,axis");
  const auto cells = split(ls[1]);
  ASSERT_EQ(cells.size(), 8u);
  const int axis = std::stoi(cells[7]);
  EXPECT_TRUE(axis >= 1 && axis <= 3);
}

TEST(Run, IdentityRowsCoverThreeLocations) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::identity;
  cfg.surfaces.resize(1);
  cfg.h = {0.125};
  cfg.variant = VariantChoice::new_;
  const auto result = run(cfg);
  ASSERT_EQ(result.rows.size(), 3u);
  EXPECT_EQ(result.rows[0].quantity, "on_surface");
  EXPECT_EQ(result.rows[1].quantity, "inside");
  EXPECT_EQ(result.rows[2].quantity, "outside");
  // delta = 3/8 is too wide for accuracy on the unit sphere; outside only quadrature error remains
  EXPECT_LT(result.rows[2].norm_max, 1e-4);
  for (const auto& r : result.rows) EXPECT_TRUE(std::isfinite(r.norm_max));
}

TEST(Run, NonConvergencePropagates) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::interface;
  cfg.surfaces.resize(1);
  cfg.h = {0.25, 0.125};
  cfg.fine_h = 0.125;
  cfg.max_iter = 1;
  cfg.variant = VariantChoice::new_;
  std::ostringstream csv;
  RunResult result;
  EXPECT_THROW(run(cfg, &csv, result), NonConvergence);
  EXPECT_EQ(lines(csv.str()).size(), 1u);
  ASSERT_EQ(result.trace.size(), 1u);
  EXPECT_EQ(result.trace[0].iteration, 1);
  EXPECT_GT(result.trace[0].error, 0.0);
}

TEST(Cli, DeterministicRunsAreByteIdentical) {
  const auto dir = scratch_dir("cli_det");
  std::ofstream(dir / "ls.toml") << "surface = [\"sphere\", \"ellipsoid\"]\nh = [\"1/8\", \"1/16\"]\n";
  const auto a = dir / "a.csv", b = dir / "b.csv";
  const std::string base = "layer-sum --config \"" + (dir / "ls.toml").string() + "\" --deterministic --output ";
  ASSERT_EQ(run_cli(base + "\"" + a.string() + "\" --threads 1", dir / "log1"), 0) << slurp(dir / "log1");
  ASSERT_EQ(run_cli(base + "\"" + b.string() + "\" --threads 3", dir / "log2"), 0) << slurp(dir / "log2");
  const std::string ca = slurp(a);
  EXPECT_EQ(ca, slurp(b));
  const auto ls = lines(ca);
  ASSERT_EQ(ls.size(), 9u);
  EXPECT_EQ(ls[0], kResultHeader);
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_EQ(split(ls[i]).back(), "0.000");
  EXPECT_TRUE(std::filesystem::exists(dir / "a.dat"));
}

TEST(Cli, InterfaceWritesTrace) {
  const auto dir = scratch_dir("cli_iface");
  std::ofstream(dir / "i.toml") << "surface = \"sphere\"\nh = [0.25, 0.125]\nfine_h = 0.125\nvariant = \"new\"\n";
  ASSERT_EQ(run_cli("interface --config \"" + (dir / "i.toml").string() + "\" --output \"" + (dir / "i.csv").string() +
                        "\"",
                    dir / "log"),
            0)
      << slurp(dir / "log");
  const auto rows = lines(slurp(dir / "i.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(split(rows[1])[1], "richardson");
  const auto trace = lines(slurp(dir / "i_trace.csv"));
  EXPECT_EQ(trace[0], "variant,h,iteration,error");
  EXPECT_GT(trace.size(), 3u);
}

TEST(Cli, NonConvergenceKeepsTraceAndFails) {
  const auto dir = scratch_dir("cli_nonconv");
  std::ofstream(dir / "i.toml") << "surface = \"sphere\"\nh = [0.25, 0.125]\nfine_h = 0.125\nmax_iter = 2\n";
  EXPECT_EQ(run_cli("interface --config \"" + (dir / "i.toml").string() + "\" --output \"" + (dir / "i.csv").string() +
                        "\"",
                    dir / "log"),
            1);
  EXPECT_NE(slurp(dir / "log").find("no convergence"), std::string::npos) << slurp(dir / "log");
  EXPECT_EQ(lines(slurp(dir / "i.csv")), std::vector<std::string>{kResultHeader});
  EXPECT_EQ(lines(slurp(dir / "i_trace.csv")).size(), 3u);
}

TEST(Cli, MomentsNeedsNoConfig) {
  const auto dir = scratch_dir("cli_moments");
  ASSERT_EQ(run_cli("moments", dir / "log"), 0);
  EXPECT_EQ(lines(slurp(dir / "log"))[0], "quantity,value,reference,difference");
}

TEST(Cli, ErrorsExitNonZero) {
  const auto dir = scratch_dir("cli_err");
  std::ofstream(dir / "bad.toml") << "surface = \"sphere\"\nh = [0.1]\ndelta_factor = 3x\n";
  EXPECT_EQ(run_cli("identity --config \"" + (dir / "bad.toml").string() + "\"", dir / "log"), 1);
  const std::string log = slurp(dir / "log");
  EXPECT_NE(log.find("line 3"), std::string::npos) << log;
  EXPECT_NE(log.find("delta_factor"), std::string::npos) << log;
  EXPECT_EQ(run_cli("identity --config \"" + (dir / "missing.toml").string() + "\"", dir / "log"), 1);
  EXPECT_NE(run_cli("identity", dir / "log"), 0);
  EXPECT_NE(run_cli("nosuch", dir / "log"), 0);
  std::ofstream(dir / "other.toml") << "experiment = \"quadrature\"\nsurface = \"sphere\"\nh = [0.1]\n";
  EXPECT_EQ(run_cli("identity --config \"" + (dir / "other.toml").string() + "\"", dir / "log"), 1);
}
