#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lamfe/runner.hpp"

using namespace lamfe;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A deliberately tiny problem so pipeline tests stay fast.
std::string tiny_config(const std::string& outdir) {
  return "[run]\n"
         "name = tiny\n"
         "[geometry]\n"
         "width = 4\n"
         "limb_length = 2\n"
         "inner_radius = 6.6\n"
         "n_plies = 3\n"
         "[mesh]\n"
         "n_arc = 4\n"
         "n_limb = 1\n"
         "n_width = 4\n"
         "stiff_columns = 1\n"
         "[stacking]\n"
         "angles = 45 -45 0\n"
         "[materials]\n"
         "unit_scale = 1000\n"
         "[boundary]\n"
         "moment = 96.8\n"
         "[solver]\n"
         "preconditioner = geneo\n"
         "n_sub = 2\n"
         "overlap = 1\n"
         "n_ev = 6\n"
         "[output]\n"
         "directory = " +
         outdir +
         "\n"
         "profile = 0 2\n";
}

}  // namespace

TEST_CASE("config round-trips through serialize and parse") {
  RunConfig cfg = parse_config(tiny_config("/tmp/x"));
  cfg.wrinkle.angle_deg = 12.0;
  cfg.periodic_width = true;
  cfg.solver.tol = 3e-5;
  cfg.mesh.bias_width = 4.0;
  const RunConfig back = parse_config(serialize(cfg));
  CHECK(back == cfg);
}

TEST_CASE("defaults are filled and logged") {
  std::vector<std::string> log;
  const RunConfig cfg = parse_config("[run]\nname = d\n", &log);
  CHECK(cfg.solver.tol == 1e-4);
  CHECK(cfg.solver.preconditioner == PreconKind::Geneo);
  CHECK(cfg.geometry.inner_radius_R == 6.6);
  CHECK(!log.empty());
  bool mentions_tol = false;
  for (const auto& line : log)
    if (line.find("tol") != std::string::npos) mentions_tol = true;
  CHECK(mentions_tol);
}

TEST_CASE("parse errors carry line numbers") {
  const std::string bad =
      "[geometry]\n"
      "width = 5\n"
      "no_such_key = 1\n";
  try {
    parse_config(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[nosection]\nx = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[geometry]\nwidth = abc\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[geometry]\nwidth = 1\nwidth = 2\n"),
                  ParseError);
}

TEST_CASE("wrinkle block rejects amplitude together with a target angle") {
  const std::string bad =
      "[wrinkle]\n"
      "amplitude = 0.1\n"
      "angle = 12\n";
  CHECK_THROWS_AS(parse_config(bad), ParseError);
  // Either alone is fine.
  CHECK(parse_config("[wrinkle]\namplitude = 0.1\n").wrinkle.active());
  CHECK(parse_config("[wrinkle]\nangle = 12\n").wrinkle.active());
  CHECK(!parse_config("[run]\nname = p\n").wrinkle.active());
}

TEST_CASE("shipped presets parse and carry the reference setups") {
  const auto& all = presets();
  REQUIRE(all.count("corner12") == 1);
  REQUIRE(all.count("corner39") == 1);
  for (const auto& [name, text] : all) {
    CAPTURE(name);
    CHECK_NOTHROW(parse_config(text));
  }
  const RunConfig c12 = parse_config(all.at("corner12"));
  CHECK(c12.geometry.width_W == 15.0);
  CHECK(c12.geometry.limb_length_L == 3.0);
  CHECK(c12.geometry.inner_radius_R == 6.6);
  CHECK(c12.geometry.n_plies == 12);
  CHECK(c12.stacking.size() == 12);
  const RunConfig c39 = parse_config(all.at("corner39"));
  CHECK(c39.geometry.n_plies == 39);
  CHECK(c39.stacking.size() == 39);
  CHECK(c39.wrinkle.active());
}

TEST_CASE("wrinkle resolution fills the centred defaults") {
  RunConfig cfg = parse_config("[wrinkle]\nangle = 12\n");
  const auto p = resolve_wrinkle(cfg.wrinkle, cfg.geometry);
  REQUIRE(p.has_value());
  CHECK(p->l_def == doctest::Approx(cfg.geometry.width_W / 2));
  CHECK(p->r_def == doctest::Approx(cfg.geometry.inner_radius_R +
                                    0.25 * cfg.geometry.total_thickness()));
  CHECK(p->amplitude_d > 0);
  CHECK(!resolve_wrinkle(parse_config("[run]\n").wrinkle,
                         cfg.geometry));
}

TEST_CASE("pipeline smoke run writes the artifact set and converges") {
  const std::string outdir = "/tmp/lamfe_cli_smoke";
  fs::remove_all(outdir);
  const RunConfig cfg = parse_config(tiny_config(outdir));
  const RunSummary sum = run(cfg, 2);
  CHECK(sum.converged);
  CHECK(sum.n_dofs > 0);
  CHECK(sum.iterations > 0);
  CHECK(sum.failure.F_max > 0);
  CHECK(fs::exists(fs::path(outdir) / "solve_report.csv"));
  CHECK(fs::exists(fs::path(outdir) / "residuals.csv"));
  CHECK(fs::exists(fs::path(outdir) / "failure.csv"));
  CHECK(fs::exists(fs::path(outdir) / "profile_0.csv"));
  fs::remove_all(outdir);
}

TEST_CASE("identical configs give bitwise-identical outputs across threads") {
  const std::string out1 = "/tmp/lamfe_cli_det1";
  const std::string out2 = "/tmp/lamfe_cli_det2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  RunConfig cfg1 = parse_config(tiny_config(out1));
  RunConfig cfg2 = parse_config(tiny_config(out2));
  run(cfg1, 1);
  run(cfg2, 4);
  for (const char* name :
       {"solve_report.csv", "residuals.csv", "failure.csv", "profile_0.csv"}) {
    CAPTURE(name);
    CHECK(read_file(fs::path(out1) / name) ==
          read_file(fs::path(out2) / name));
  }
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("sweep aggregates one row per value and survives failures") {
  const std::string outdir = "/tmp/lamfe_cli_sweep";
  fs::remove_all(outdir);
  fs::create_directories(outdir);
  RunConfig base = parse_config(tiny_config(outdir + "/runs"));
  base.solver.maxit = 500;
  const std::string csv = outdir + "/sweep.csv";
  const auto rows = sweep(base, SweepKind::NSub, {1, 2, 100}, csv, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ok);
  CHECK(rows[1].ok);
  CHECK(!rows[2].ok);  // over-decomposed
  CHECK(!rows[2].error.empty());
  std::ifstream f(csv);
  std::string line;
  int n = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++n;
  CHECK(n == 4);  // header + 3 rows
  fs::remove_all(outdir);
}
