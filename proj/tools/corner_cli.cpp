#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "lamfe/runner.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("LAMFE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

lamfe::RunConfig load_config(const std::string& config_path,
                             const std::string& preset,
                             const std::string& out_dir) {
  std::vector<std::string> defaults;
  lamfe::RunConfig cfg;
  if (!config_path.empty()) {
    cfg = lamfe::parse_config_file(config_path, &defaults);
  } else {
    const auto& p = lamfe::presets();
    auto it = p.find(preset);
    if (it == p.end()) {
      std::string names;
      for (const auto& [k, v] : p) names += " " + k;
      throw lamfe::ParseError("unknown preset '" + preset + "'; available:" +
                              names);
    }
    cfg = lamfe::parse_config(it->second, &defaults);
  }
  for (const auto& d : defaults) std::cerr << "config: " << d << "\n";
  if (!out_dir.empty()) cfg.output.directory = out_dir;
  return cfg;
}

void stderr_log(const std::string& line) { std::cerr << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curved-laminate corner unfolding: FE solver and studies"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset = "corner12", out_dir;
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads")->capture_default_str();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file path");
    sub->add_option("--preset", preset, "shipped preset name")
        ->capture_default_str();
    sub->add_option("--out", out_dir, "output directory override");
  };

  auto* cmd_run = app.add_subcommand("run", "single solve with artifacts");
  add_common(cmd_run);

  auto* cmd_sweep = app.add_subcommand("sweep", "parameter sweep");
  add_common(cmd_sweep);
  std::string param;
  std::vector<double> values;
  cmd_sweep->add_option("--parameter", param,
                        "one of: angle, contrast, n_sub, refinement")
      ->required();
  cmd_sweep->add_option("--values", values, "parameter values")->required();

  auto* cmd_mesh = app.add_subcommand("export-mesh", "write the mesh as VTK");
  add_common(cmd_mesh);
  std::string mesh_path = "mesh.vtk";
  cmd_mesh->add_option("--file", mesh_path, "output VTK path")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    lamfe::RunConfig cfg = load_config(config_path, preset, out_dir);

    if (cmd_run->parsed()) {
      const auto sum = lamfe::run(cfg, threads, stderr_log);
      std::cout << "iterations=" << sum.iterations
                << " converged=" << (sum.converged ? 1 : 0)
                << " F_max=" << sum.failure.F_max
                << " M_fail=" << sum.failure.M_fail
                << " interface=" << sum.failure.interface_from_outer << "\n";
      return sum.converged ? 0 : 2;
    }
    if (cmd_sweep->parsed()) {
      lamfe::SweepKind kind;
      if (param == "angle")
        kind = lamfe::SweepKind::WrinkleAngle;
      else if (param == "contrast")
        kind = lamfe::SweepKind::Contrast;
      else if (param == "n_sub")
        kind = lamfe::SweepKind::NSub;
      else if (param == "refinement")
        kind = lamfe::SweepKind::Refinement;
      else {
        std::cerr << "unknown sweep parameter: " << param << "\n";
        return 1;
      }
      const std::string csv = cfg.output.directory + "/sweep.csv";
      const auto rows = lamfe::sweep(cfg, kind, values, csv, threads, stderr_log);
      bool all_ok = true;
      for (const auto& r : rows) all_ok = all_ok && r.ok && r.summary.converged;
      std::cout << "sweep rows=" << rows.size() << " csv=" << csv << "\n";
      return all_ok ? 0 : 2;
    }
    // export-mesh
    const auto wrinkle = lamfe::resolve_wrinkle(cfg.wrinkle, cfg.geometry);
    const auto mesh =
        cfg.flat ? lamfe::build_flat_laminate(cfg.geometry, cfg.mesh,
                                              cfg.flat_length, cfg.stacking)
                 : lamfe::build_mesh(cfg.geometry, cfg.mesh, wrinkle,
                                     cfg.stacking);
    lamfe::write_vtk_mesh(mesh, mesh_path);
    std::cout << "wrote " << mesh_path << " (" << mesh.n_elems()
              << " elements)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
