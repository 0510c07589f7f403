#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lamfe/runner.hpp"

namespace lamfe {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("config line " + std::to_string(line) + ": " + msg);
}

struct Entry {
  std::string value;
  int line;
  bool used = false;
};

// section -> key -> entries (repeats allowed, e.g. output.profile)
using Table = std::map<std::string, std::map<std::string, std::vector<Entry>>>;

Table tokenize(const std::string& text) {
  Table tab;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(no, "empty section name");
      tab[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(no, "expected key = value");
    if (section.empty()) fail(no, "key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(no, "empty key");
    if (val.empty()) fail(no, "empty value for '" + key + "'");
    tab[section][key].push_back({val, no});
  }
  return tab;
}

double to_double(const Entry& e, const std::string& key) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(e.value, &pos);
  } catch (const std::exception&) {
    fail(e.line, "'" + key + "' is not a number: " + e.value);
  }
  if (pos != e.value.size())
    fail(e.line, "trailing characters in '" + key + "': " + e.value);
  return v;
}

int to_int(const Entry& e, const std::string& key) {
  const double v = to_double(e, key);
  if (v != std::floor(v)) fail(e.line, "'" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  fail(e.line, "'" + key + "' must be true or false");
}

class Reader {
 public:
  Reader(Table tab, std::vector<std::string>* log) : tab_(std::move(tab)), log_(log) {}

  bool has_section(const std::string& s) const { return tab_.count(s) > 0; }

  template <class T, class Conv>
  void get(const std::string& sec, const std::string& key, T& out, Conv conv) {
    auto* e = find(sec, key);
    if (!e) {
      note_default(sec, key, out);
      return;
    }
    out = conv(*e, key);
  }

  void get_num(const std::string& s, const std::string& k, double& out) {
    get(s, k, out, to_double);
  }
  void get_num(const std::string& s, const std::string& k, int& out) {
    get(s, k, out, to_int);
  }
  void get_bool(const std::string& s, const std::string& k, bool& out) {
    get(s, k, out, to_bool);
  }
  void get_str(const std::string& s, const std::string& k, std::string& out) {
    get(s, k, out, [](const Entry& e, const std::string&) { return e.value; });
  }
  void get_opt(const std::string& s, const std::string& k,
               std::optional<double>& out) {
    auto* e = find(s, k);
    if (e) out = to_double(*e, k);
  }

  const std::vector<Entry>* all(const std::string& sec, const std::string& key) {
    auto si = tab_.find(sec);
    if (si == tab_.end()) return nullptr;
    auto ki = si->second.find(key);
    if (ki == si->second.end()) return nullptr;
    for (auto& e : ki->second) e.used = true;
    return &ki->second;
  }

  void check_unused() const {
    for (const auto& [sec, keys] : tab_) {
      if (!known_sections_.count(sec))
        fail(first_line(keys), "unknown section [" + sec + "]");
      for (const auto& [key, entries] : keys)
        for (const auto& e : entries)
          if (!e.used) fail(e.line, "unknown key '" + key + "' in [" + sec + "]");
    }
  }

  void know(const std::string& sec) { known_sections_.insert(sec); }

 private:
  Entry* find(const std::string& sec, const std::string& key) {
    auto si = tab_.find(sec);
    if (si == tab_.end()) return nullptr;
    auto ki = si->second.find(key);
    if (ki == si->second.end()) return nullptr;
    if (ki->second.size() > 1)
      fail(ki->second[1].line, "duplicate key '" + key + "'");
    ki->second[0].used = true;
    return &ki->second[0];
  }

  static int first_line(const std::map<std::string, std::vector<Entry>>& keys) {
    int line = 0;
    for (const auto& [k, es] : keys)
      for (const auto& e : es)
        if (line == 0 || e.line < line) line = e.line;
    return line;
  }

  template <class T>
  void note_default(const std::string& sec, const std::string& key,
                    const T& val) {
    if (!log_) return;
    std::ostringstream os;
    os << "default " << sec << "." << key << " = " << val;
    log_->push_back(os.str());
  }

  Table tab_;
  std::vector<std::string>* log_;
  std::set<std::string> known_sections_;
};

std::string precon_name(PreconKind k) {
  switch (k) {
    case PreconKind::None: return "none";
    case PreconKind::OneLevel: return "one-level";
    default: return "geneo";
  }
}

}  // namespace

RunConfig parse_config(const std::string& text,
                       std::vector<std::string>* default_log) {
  RunConfig cfg;
  Reader r(tokenize(text), default_log);

  r.know("run");
  r.get_str("run", "name", cfg.name);

  r.know("geometry");
  auto& g = cfg.geometry;
  r.get_num("geometry", "width", g.width_W);
  r.get_num("geometry", "limb_length", g.limb_length_L);
  r.get_num("geometry", "inner_radius", g.inner_radius_R);
  r.get_num("geometry", "ply_thickness", g.ply_thickness);
  r.get_num("geometry", "interface_thickness", g.interface_thickness);
  r.get_num("geometry", "n_plies", g.n_plies);
  r.get_num("geometry", "resin_edge_width", g.resin_edge_width);
  r.get_bool("geometry", "flat", cfg.flat);
  r.get_num("geometry", "flat_length", cfg.flat_length);

  r.know("mesh");
  auto& m = cfg.mesh;
  r.get_num("mesh", "n_arc", m.n_elems_arc);
  r.get_num("mesh", "n_limb", m.n_elems_limb);
  r.get_num("mesh", "n_width", m.n_elems_width);
  r.get_num("mesh", "per_ply", m.n_elems_per_ply);
  r.get_num("mesh", "per_interface", m.n_elems_per_interface);
  r.get_num("mesh", "bias_width", m.bias_width);
  r.get_num("mesh", "bias_layer", m.bias_layer);
  r.get_num("mesh", "bias_defect", m.bias_defect);
  r.get_num("mesh", "stiff_columns", m.stiff_layer_columns);

  r.know("stacking");
  if (const auto* es = r.all("stacking", "angles")) {
    if (es->size() > 1) fail((*es)[1].line, "duplicate key 'angles'");
    cfg.stacking.clear();
    std::istringstream in((*es)[0].value);
    std::string tok;
    while (in >> tok) {
      Entry fake{tok, (*es)[0].line};
      cfg.stacking.push_back(to_double(fake, "angles"));
    }
  } else {
    // default 12-ply layup
    cfg.stacking = {45, -45, 90, 0, -45, 45, -45, 45, 0, 90, 45, -45};
    if (default_log) default_log->push_back("default stacking.angles = 12-ply layup");
  }

  r.know("materials");
  auto& mat = cfg.materials;
  r.get_num("materials", "ply_E11", mat.ply.E11);
  r.get_num("materials", "ply_E22", mat.ply.E22);
  r.get_num("materials", "ply_E33", mat.ply.E33);
  r.get_num("materials", "ply_G12", mat.ply.G12);
  r.get_num("materials", "ply_G13", mat.ply.G13);
  r.get_num("materials", "ply_G23", mat.ply.G23);
  r.get_num("materials", "ply_nu12", mat.ply.nu12);
  r.get_num("materials", "ply_nu13", mat.ply.nu13);
  r.get_num("materials", "ply_nu23", mat.ply.nu23);
  r.get_num("materials", "interface_E", mat.interface_layer.E);
  r.get_num("materials", "interface_nu", mat.interface_layer.nu);
  r.get_num("materials", "resin_E", mat.resin_edge.E);
  r.get_num("materials", "resin_nu", mat.resin_edge.nu);
  r.get_num("materials", "stiff_factor", mat.stiff_layer_factor);
  r.get_num("materials", "unit_scale", mat.unit_scale);

  r.know("wrinkle");
  auto& w = cfg.wrinkle;
  r.get_opt("wrinkle", "amplitude", w.amplitude);
  r.get_opt("wrinkle", "angle", w.angle_deg);
  if (w.amplitude && w.angle_deg)
    throw ParseError(
        "config: wrinkle amplitude and angle are mutually exclusive");
  r.get_num("wrinkle", "s_def", w.s_def);
  r.get_num("wrinkle", "l_def", w.l_def);
  r.get_num("wrinkle", "r_def", w.r_def);
  r.get_num("wrinkle", "b1", w.b1);
  r.get_num("wrinkle", "b2_minus", w.b2_minus);
  r.get_num("wrinkle", "b2_plus", w.b2_plus);
  r.get_num("wrinkle", "b3", w.b3);

  r.know("boundary");
  r.get_bool("boundary", "periodic", cfg.periodic_width);
  r.get_num("boundary", "moment", cfg.moment);

  r.know("failure");
  r.get_num("failure", "s33", cfg.allowables.s33);
  r.get_num("failure", "s13", cfg.allowables.s13);

  r.know("solver");
  std::string pk = precon_name(cfg.solver.preconditioner);
  r.get_str("solver", "preconditioner", pk);
  if (pk == "none")
    cfg.solver.preconditioner = PreconKind::None;
  else if (pk == "one-level")
    cfg.solver.preconditioner = PreconKind::OneLevel;
  else if (pk == "geneo")
    cfg.solver.preconditioner = PreconKind::Geneo;
  else
    throw ParseError("config: unknown preconditioner '" + pk +
                     "' (expected none, one-level or geneo)");
  r.get_num("solver", "tol", cfg.solver.tol);
  r.get_num("solver", "maxit", cfg.solver.maxit);
  r.get_num("solver", "n_sub", cfg.solver.n_sub);
  r.get_num("solver", "overlap", cfg.solver.overlap);
  r.get_num("solver", "n_ev", cfg.solver.n_ev);
  r.get_opt("solver", "threshold", cfg.solver.ev_threshold);

  r.know("output");
  r.get_str("output", "directory", cfg.output.directory);
  r.get_bool("output", "vtk", cfg.output.vtk);
  if (const auto* es = r.all("output", "profile")) {
    for (const auto& e : *es) {
      std::istringstream in(e.value);
      double a = 0, wpos = 0;
      if (!(in >> a >> wpos))
        fail(e.line, "profile expects '<arc_deg> <width_mm>'");
      cfg.output.profiles.push_back({a, wpos});
    }
  }

  r.check_unused();

  if (g.n_plies < 2) throw ParseError("config: n_plies must be >= 2");
  if (static_cast<int>(cfg.stacking.size()) != g.n_plies)
    throw ParseError("config: stacking has " +
                     std::to_string(cfg.stacking.size()) + " angles for " +
                     std::to_string(g.n_plies) + " plies");
  return cfg;
}

RunConfig parse_config_file(const std::string& path,
                            std::vector<std::string>* default_log) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), default_log);
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream o;
  o.precision(17);
  o << "[run]\nname = " << cfg.name << "\n\n";
  const auto& g = cfg.geometry;
  o << "[geometry]\n"
    << "width = " << g.width_W << "\n"
    << "limb_length = " << g.limb_length_L << "\n"
    << "inner_radius = " << g.inner_radius_R << "\n"
    << "ply_thickness = " << g.ply_thickness << "\n"
    << "interface_thickness = " << g.interface_thickness << "\n"
    << "n_plies = " << g.n_plies << "\n"
    << "resin_edge_width = " << g.resin_edge_width << "\n"
    << "flat = " << (cfg.flat ? "true" : "false") << "\n"
    << "flat_length = " << cfg.flat_length << "\n\n";
  const auto& m = cfg.mesh;
  o << "[mesh]\n"
    << "n_arc = " << m.n_elems_arc << "\n"
    << "n_limb = " << m.n_elems_limb << "\n"
    << "n_width = " << m.n_elems_width << "\n"
    << "per_ply = " << m.n_elems_per_ply << "\n"
    << "per_interface = " << m.n_elems_per_interface << "\n"
    << "bias_width = " << m.bias_width << "\n"
    << "bias_layer = " << m.bias_layer << "\n"
    << "bias_defect = " << m.bias_defect << "\n"
    << "stiff_columns = " << m.stiff_layer_columns << "\n\n";
  o << "[stacking]\nangles =";
  for (double a : cfg.stacking) o << " " << a;
  o << "\n\n";
  const auto& mat = cfg.materials;
  o << "[materials]\n"
    << "ply_E11 = " << mat.ply.E11 << "\n"
    << "ply_E22 = " << mat.ply.E22 << "\n"
    << "ply_E33 = " << mat.ply.E33 << "\n"
    << "ply_G12 = " << mat.ply.G12 << "\n"
    << "ply_G13 = " << mat.ply.G13 << "\n"
    << "ply_G23 = " << mat.ply.G23 << "\n"
    << "ply_nu12 = " << mat.ply.nu12 << "\n"
    << "ply_nu13 = " << mat.ply.nu13 << "\n"
    << "ply_nu23 = " << mat.ply.nu23 << "\n"
    << "interface_E = " << mat.interface_layer.E << "\n"
    << "interface_nu = " << mat.interface_layer.nu << "\n"
    << "resin_E = " << mat.resin_edge.E << "\n"
    << "resin_nu = " << mat.resin_edge.nu << "\n"
    << "stiff_factor = " << mat.stiff_layer_factor << "\n"
    << "unit_scale = " << mat.unit_scale << "\n\n";
  const auto& w = cfg.wrinkle;
  o << "[wrinkle]\n";
  if (w.amplitude) o << "amplitude = " << *w.amplitude << "\n";
  if (w.angle_deg) o << "angle = " << *w.angle_deg << "\n";
  o << "s_def = " << w.s_def << "\n"
    << "l_def = " << w.l_def << "\n"
    << "r_def = " << w.r_def << "\n"
    << "b1 = " << w.b1 << "\n"
    << "b2_minus = " << w.b2_minus << "\n"
    << "b2_plus = " << w.b2_plus << "\n"
    << "b3 = " << w.b3 << "\n\n";
  o << "[boundary]\n"
    << "periodic = " << (cfg.periodic_width ? "true" : "false") << "\n"
    << "moment = " << cfg.moment << "\n\n";
  o << "[failure]\n"
    << "s33 = " << cfg.allowables.s33 << "\n"
    << "s13 = " << cfg.allowables.s13 << "\n\n";
  const auto& s = cfg.solver;
  o << "[solver]\n"
    << "preconditioner = " << precon_name(s.preconditioner) << "\n"
    << "tol = " << s.tol << "\n"
    << "maxit = " << s.maxit << "\n"
    << "n_sub = " << s.n_sub << "\n"
    << "overlap = " << s.overlap << "\n"
    << "n_ev = " << s.n_ev << "\n";
  if (s.ev_threshold) o << "threshold = " << *s.ev_threshold << "\n";
  o << "\n[output]\n"
    << "directory = " << cfg.output.directory << "\n"
    << "vtk = " << (cfg.output.vtk ? "true" : "false") << "\n";
  for (const auto& p : cfg.output.profiles)
    o << "profile = " << p[0] << " " << p[1] << "\n";
  return o.str();
}

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"corner12", R"(# 12-ply corner, desk scale
[run]
name = corner12

[geometry]
width = 15
limb_length = 3
inner_radius = 6.6
ply_thickness = 0.23
interface_thickness = 0.02
n_plies = 12
resin_edge_width = 2

[mesh]
n_arc = 10
n_limb = 2
n_width = 14
per_ply = 1
per_interface = 1
bias_width = 4
bias_defect = 1.5
stiff_columns = 1

[stacking]
angles = 45 -45 90 0 -45 45 -45 45 0 90 45 -45

[materials]
unit_scale = 1000

[boundary]
periodic = false
moment = 96.8

[solver]
preconditioner = geneo
tol = 1e-4
maxit = 2000
n_sub = 4
overlap = 2
n_ev = 10

[output]
directory = out/corner12
profile = 0 2.156
)"},
      {"corner12_full", R"(# 12-ply corner at the published resolution
[run]
name = corner12_full

[geometry]
width = 15
limb_length = 3
inner_radius = 6.6
ply_thickness = 0.23
interface_thickness = 0.02
n_plies = 12
resin_edge_width = 2

[mesh]
n_arc = 44
n_limb = 6
n_width = 56
per_ply = 6
per_interface = 6
bias_width = 400
bias_defect = 2
stiff_columns = 2

[stacking]
angles = 45 -45 90 0 -45 45 -45 45 0 90 45 -45

[materials]
unit_scale = 1000

[boundary]
periodic = false
moment = 96.8

[solver]
preconditioner = geneo
tol = 1e-4
maxit = 2000
n_sub = 8
overlap = 2
n_ev = 10

[output]
directory = out/corner12_full
profile = 0 2.156
)"},
      {"corner39", R"(# 39-ply corner for the wrinkle study, desk scale
[run]
name = corner39

[geometry]
width = 52
limb_length = 10
inner_radius = 22
ply_thickness = 0.24
interface_thickness = 0.015
n_plies = 39
resin_edge_width = 0

[mesh]
n_arc = 12
n_limb = 2
n_width = 10
per_ply = 1
per_interface = 1
bias_defect = 2
stiff_columns = 1

[stacking]
angles = -45 45 90 0 -45 45 90 0 -45 45 -45 45 90 -45 45 90 0 -45 45 0 45 -45 0 90 45 -45 90 45 -45 45 -45 0 90 45 -45 0 90 45 -45

[materials]
unit_scale = 1000

[wrinkle]
angle = 12
s_def = 0.5
b1 = 0.2
b3 = 0.5

[boundary]
periodic = true
moment = 9580

[solver]
preconditioner = geneo
tol = 1e-4
maxit = 2000
n_sub = 4
overlap = 2
n_ev = 10

[output]
directory = out/corner39
profile = 0 26
)"}};
  return p;
}

}  // namespace lamfe
