#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamfe/runner.hpp"

namespace lamfe {

namespace {

void log_stage(const Logger& log, const std::string& msg) {
  if (!log) return;
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%F %T", std::localtime(&t));
  log(std::string(stamp) + "  " + msg);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::optional<WrinkleParams> resolve_wrinkle(const WrinkleConfig& w,
                                             const CornerGeometry& geom) {
  if (!w.active()) return std::nullopt;
  WrinkleParams p;
  p.s_def = w.s_def;
  p.l_def = w.l_def >= 0 ? w.l_def : 0.5 * geom.width_W;
  p.r_def = w.r_def >= 0
                ? w.r_def
                : geom.inner_radius_R + 0.25 * geom.total_thickness();
  p.b1 = w.b1;
  p.b2_minus = w.b2_minus;
  p.b2_plus = w.b2_plus;
  p.b3 = w.b3;
  if (w.amplitude)
    p.amplitude_d = *w.amplitude;
  else
    p.amplitude_d = amplitude_for_angle(*w.angle_deg, p, geom);
  if (p.amplitude_d == 0) return std::nullopt;
  return p;
}

RunSummary run(const RunConfig& cfg, int n_threads, const Logger& log) {
  namespace fs = std::filesystem;
  RunSummary sum;
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t_start)
                   .count()) +
           "s";
  };

  fs::create_directories(cfg.output.directory);
  const std::string dir = cfg.output.directory + "/";

  log_stage(log, "[" + cfg.name + "] build: meshing");
  const auto wrinkle = resolve_wrinkle(cfg.wrinkle, cfg.geometry);
  if (wrinkle) {
    sum.wrinkle_amplitude = wrinkle->amplitude_d;
    sum.wrinkle_angle_deg = max_wrinkle_angle(*wrinkle, cfg.geometry);
  }
  const StructuredMesh mesh =
      cfg.flat ? build_flat_laminate(cfg.geometry, cfg.mesh, cfg.flat_length,
                                     cfg.stacking)
               : build_mesh(cfg.geometry, cfg.mesh, wrinkle, cfg.stacking);
  sum.n_elems = mesh.n_elems();

  log_stage(log, "[" + cfg.name + "] assemble: " +
                     std::to_string(mesh.n_elems()) + " elements (" +
                     elapsed() + ")");
  const QuadratureRule q = QuadratureRule::gauss(3);
  SparseSystem sys = assemble(mesh, cfg.stacking, cfg.materials, q, n_threads,
                              cfg.periodic_width);
  sum.n_dofs = sys.K.n;
  apply_dirichlet(sys, mesh.clamped_nodes, {0, 0, 0});
  if (cfg.moment != 0) apply_moment_load(sys, mesh, cfg.moment);

  log_stage(log, "[" + cfg.name + "] precondition: " +
                     std::to_string(sys.K.n) + " dofs (" + elapsed() + ")");
  std::unique_ptr<Preconditioner> owned;
  const Preconditioner* P = nullptr;
  static const IdentityPreconditioner identity;
  switch (cfg.solver.preconditioner) {
    case PreconKind::None:
      P = &identity;
      break;
    case PreconKind::OneLevel:
      owned = make_one_level(sys.K, mesh, sys.dofs, cfg.solver.n_sub,
                             cfg.solver.overlap, cfg.periodic_width, n_threads);
      P = owned.get();
      break;
    case PreconKind::Geneo: {
      GeneoOptions opt;
      opt.n_sub = cfg.solver.n_sub;
      opt.overlap_layers = cfg.solver.overlap;
      opt.n_ev = cfg.solver.n_ev;
      opt.ev_threshold = cfg.solver.ev_threshold;
      opt.n_threads = n_threads;
      GeneoSetupInfo info;
      owned = make_geneo(sys.K, mesh, sys.dofs, cfg.stacking, cfg.materials, q,
                         opt, cfg.periodic_width, &info);
      sum.coarse_dim = info.coarse_dim;
      log_stage(log, "[" + cfg.name + "] coarse space: dim " +
                         std::to_string(info.coarse_dim) + " (" +
                         fmt(info.setup_time_s) + "s setup)");
      P = owned.get();
      break;
    }
  }

  log_stage(log, "[" + cfg.name + "] solve (" + elapsed() + ")");
  std::vector<double> u;
  const SolveReport rep = cg(sys.K, sys.f, *P, cfg.solver.tol,
                             cfg.solver.maxit, u, n_threads);
  sum.converged = rep.converged;
  sum.iterations = rep.iterations;
  sum.true_relative_residual = rep.true_relative_residual;
  log_stage(log, "[" + cfg.name + "] solve: " + std::to_string(rep.iterations) +
                     " iterations, converged=" +
                     (rep.converged ? "yes" : "no") + " (" +
                     fmt(rep.wall_time_s) + "s)");

  for (int node = 0; node < mesh.n_nodes(); ++node) {
    double m2 = 0;
    for (int c = 0; c < 3; ++c) {
      const double v = u[sys.dofs.dof(node, c)];
      m2 += v * v;
    }
    sum.max_displacement = std::max(sum.max_displacement, std::sqrt(m2));
  }

  log_stage(log, "[" + cfg.name + "] postprocess (" + elapsed() + ")");
  const StressField field =
      recover_stress(u, mesh, sys.dofs, cfg.stacking, cfg.materials, q);
  sum.failure = evaluate_failure(field, mesh, cfg.allowables, cfg.moment);

  {
    std::ofstream f(dir + "solve_report.csv");
    f << "preconditioner,n_dofs,coarse_dim,iterations,converged,"
         "true_relative_residual\n";
    f << P->name() << "," << sys.K.n << "," << sum.coarse_dim << ","
      << rep.iterations << "," << (rep.converged ? 1 : 0) << ","
      << fmt(rep.true_relative_residual) << "\n";
  }
  {
    std::ofstream f(dir + "residuals.csv");
    f << "iteration,relative_residual\n";
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
      f << i << "," << fmt(rep.residual_history[i]) << "\n";
  }
  write_failure_csv(dir + "failure.csv", sum.failure, sum.wrinkle_angle_deg,
                    sum.max_displacement);
  if (!cfg.flat) {
    for (std::size_t i = 0; i < cfg.output.profiles.size(); ++i) {
      const auto& p = cfg.output.profiles[i];
      const auto profile = extract_line(field, mesh, cfg.allowables, p[0], p[1]);
      write_profile_csv(dir + "profile_" + std::to_string(i) + ".csv", profile);
    }
  }
  if (cfg.output.vtk) {
    write_vtk_mesh(mesh, dir + "mesh.vtk");
    write_vtk_stress(mesh, field, sum.failure, dir + "stress.vtk");
  }
  log_stage(log, "[" + cfg.name + "] done: F_max=" + fmt(sum.failure.F_max) +
                     " M_fail=" + fmt(sum.failure.M_fail) + " (" + elapsed() +
                     ")");
  return sum;
}

std::vector<SweepRow> sweep(const RunConfig& base, SweepKind kind,
                            const std::vector<double>& values,
                            const std::string& out_csv, int n_threads,
                            const Logger& log) {
  std::vector<SweepRow> rows;
  const char* kind_name = kind == SweepKind::WrinkleAngle ? "angle"
                          : kind == SweepKind::Contrast   ? "contrast"
                          : kind == SweepKind::NSub       ? "n_sub"
                                                          : "refinement";
  for (double v : values) {
    RunConfig cfg = base;
    cfg.name = base.name + "_" + kind_name + "_" + fmt(v);
    cfg.output.directory = base.output.directory + "/" + kind_name + "_" + fmt(v);
    switch (kind) {
      case SweepKind::WrinkleAngle:
        cfg.wrinkle.amplitude.reset();
        cfg.wrinkle.angle_deg.reset();
        if (v != 0) cfg.wrinkle.angle_deg = v;
        break;
      case SweepKind::Contrast:
        cfg.materials.interface_layer.E = cfg.materials.ply.E22 / v;
        break;
      case SweepKind::NSub:
        cfg.solver.n_sub = static_cast<int>(v);
        break;
      case SweepKind::Refinement:
        cfg.mesh.n_elems_per_ply = static_cast<int>(v);
        cfg.mesh.n_elems_per_interface = static_cast<int>(v);
        break;
    }
    SweepRow row;
    row.value = v;
    try {
      row.summary = run(cfg, n_threads, log);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      log_stage(log, "[" + cfg.name + "] FAILED: " + row.error);
    }
    rows.push_back(std::move(row));
  }

  // Refinement protocol: error of peak F relative to the next level.
  if (kind == SweepKind::Refinement) {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
      if (rows[i].ok && rows[i + 1].ok && rows[i + 1].summary.failure.F_max > 0)
        rows[i].rel_error =
            std::abs(rows[i].summary.failure.F_max -
                     rows[i + 1].summary.failure.F_max) /
            rows[i + 1].summary.failure.F_max;
  }

  if (!out_csv.empty()) {
    std::filesystem::create_directories(
        std::filesystem::path(out_csv).parent_path().string().empty()
            ? "."
            : std::filesystem::path(out_csv).parent_path().string());
    std::ofstream f(out_csv);
    f << "value,ok,n_dofs,coarse_dim,iterations,converged,F_max,M_fail,"
         "interface_from_outer,rel_error,error\n";
    for (const auto& r : rows) {
      const auto& s = r.summary;
      f << fmt(r.value) << "," << (r.ok ? 1 : 0) << "," << s.n_dofs << ","
        << s.coarse_dim << "," << s.iterations << "," << (s.converged ? 1 : 0)
        << "," << fmt(s.failure.F_max) << "," << fmt(s.failure.M_fail) << ","
        << s.failure.interface_from_outer << "," << fmt(r.rel_error) << ","
        << r.error << "\n";
    }
  }
  return rows;
}

}  // namespace lamfe
