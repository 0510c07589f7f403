#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lamfe/geometry.hpp"
#include "lamfe/materials.hpp"
#include "lamfe/mesh.hpp"
#include "lamfe/postprocess.hpp"
#include "lamfe/schwarz.hpp"

namespace lamfe {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PreconKind { None, OneLevel, Geneo };

struct WrinkleConfig {
  // Exactly one of amplitude / target angle may be set; neither = pristine.
  std::optional<double> amplitude;
  std::optional<double> angle_deg;
  double s_def = 0.5;
  double l_def = -1;  // < 0: centre of the width
  double r_def = -1;  // < 0: quarter thickness above the inner radius
  double b1 = 0.2;
  double b2_minus = 0.5;
  double b2_plus = 0.25;
  double b3 = 0.5;

  bool active() const { return amplitude || angle_deg; }
  bool operator==(const WrinkleConfig&) const = default;
};

struct SolverConfig {
  PreconKind preconditioner = PreconKind::Geneo;
  double tol = 1e-4;
  int maxit = 2000;
  int n_sub = 4;
  int overlap = 2;
  int n_ev = 10;
  std::optional<double> ev_threshold;

  bool operator==(const SolverConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  bool vtk = false;
  // (arc position in degrees from apex, width position in mm)
  std::vector<std::array<double, 2>> profiles;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  std::string name = "run";
  CornerGeometry geometry;
  bool flat = false;          // layered plate instead of the corner
  double flat_length = 20.0;  // plate length when flat
  MeshSpec mesh;
  StackingSequence stacking;
  MaterialCatalog materials;
  WrinkleConfig wrinkle;
  bool periodic_width = false;
  double moment = 96.8;  // N mm / mm of width
  FailureAllowables allowables;
  SolverConfig solver;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the line-oriented [section] key = value format. Unknown keys and
/// malformed values raise ParseError with the line number; every defaulted
/// field is reported through default_log.
RunConfig parse_config(const std::string& text,
                       std::vector<std::string>* default_log = nullptr);
RunConfig parse_config_file(const std::string& path,
                            std::vector<std::string>* default_log = nullptr);
std::string serialize(const RunConfig& cfg);

/// Shipped presets by name.
const std::map<std::string, std::string>& presets();

using Logger = std::function<void(const std::string&)>;

struct RunSummary {
  bool converged = false;
  int iterations = 0;
  double true_relative_residual = 0;
  int n_dofs = 0;
  int n_elems = 0;
  int coarse_dim = 0;
  double wrinkle_amplitude = 0;
  double wrinkle_angle_deg = 0;
  double max_displacement = 0;
  FailureResult failure;
};

/// Full pipeline: mesh, assemble, constrain, solve, post-process, write
/// artifacts (solve_report.csv, failure.csv, profile_*.csv, optional VTK)
/// into output.directory.
RunSummary run(const RunConfig& cfg, int n_threads, const Logger& log = {});

enum class SweepKind { WrinkleAngle, Contrast, NSub, Refinement };

/// One run per value; aggregated one-row-per-run CSV at out_csv. The
/// refinement sweep (values = elements per layer) also reports the relative
/// error of peak F against the next level. Failed runs are recorded and the
/// sweep continues.
struct SweepRow {
  double value = 0;
  bool ok = false;
  std::string error;
  RunSummary summary;
  double rel_error = 0;  // refinement only
};
std::vector<SweepRow> sweep(const RunConfig& base, SweepKind kind,
                            const std::vector<double>& values,
                            const std::string& out_csv, int n_threads,
                            const Logger& log = {});

/// Resolves the wrinkle block into geometry-level parameters (amplitude
/// computed from the target angle when given).
std::optional<WrinkleParams> resolve_wrinkle(const WrinkleConfig& w,
                                             const CornerGeometry& geom);

}  // namespace lamfe
