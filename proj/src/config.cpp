#include "amink/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "amink/errors.hpp"

namespace amink {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double* out) {
  std::istringstream in(trim(s));
  double v = 0.0;
  if (!(in >> v)) return false;
  std::string rest;
  if (in >> rest) return false;
  *out = v;
  return std::isfinite(v);
}

bool parse_int(const std::string& s, int* out) {
  std::istringstream in(trim(s));
  long v = 0;
  if (!(in >> v)) return false;
  std::string rest;
  if (in >> rest) return false;
  *out = static_cast<int>(v);
  return v == *out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

const char* const kKnownKeys[] = {
    "norm.family",        "norm.matrix",       "norm.delta",
    "mesh.dimension",     "mesh.resolution",   "curvature.source",
    "curvature.constant", "curvature.file",    "curvature.body",
    "curvature.axes",     "solver.tol",        "solver.max_newton",
    "solver.closure_tol", "solver.t_step_init", "output.dir",
    "output.formats",
};

// Collects violations in a fixed key order so messages are reproducible.
class Checker {
 public:
  explicit Checker(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) const {
    return std::any_of(kv_.begin(), kv_.end(),
                       [&](const auto& p) { return p.first == key; });
  }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : kv_)
      if (k == key) return v;
    return fallback;
  }

  void fail(const std::string& key, const std::string& reason) {
    problems_.push_back(key + ": " + reason);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    double v = 0.0;
    if (!parse_double(get(key), &v)) {
      fail(key, "not a number ('" + get(key) + "')");
      return fallback;
    }
    return v;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    int v = 0;
    if (!parse_int(get(key), &v)) {
      fail(key, "not an integer ('" + get(key) + "')");
      return fallback;
    }
    return v;
  }

  void preflight() {
    std::set<std::string> seen;
    const std::set<std::string> known(std::begin(kKnownKeys), std::end(kKnownKeys));
    for (const auto& [k, v] : kv_) {
      if (!known.count(k)) fail(k, "unknown key");
      if (!seen.insert(k).second) fail(k, "duplicate key");
    }
  }

  void finish() const {
    if (problems_.empty()) return;
    std::string msg = "invalid configuration:";
    for (const std::string& p : problems_) msg += "\n  " + p;
    throw ConfigError(msg);
  }

 private:
  const KeyValues& kv_;
  std::vector<std::string> problems_;
};

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find(' ') != std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed key '" +
                        key + "'");
    kv.emplace_back(key, value);
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str(), path);
}

RunConfig validate_config(const KeyValues& kv) {
  Checker check(kv);
  check.preflight();
  RunConfig cfg;

  // --- norm ---
  cfg.norm_family = check.get("norm.family");
  const bool family_known = cfg.norm_family == "euclidean" ||
                            cfg.norm_family == "quadratic" ||
                            cfg.norm_family == "quartic";
  if (!check.has("norm.family"))
    check.fail("norm.family", "missing (expected euclidean, quadratic or quartic)");
  else if (!family_known)
    check.fail("norm.family", "unknown family '" + cfg.norm_family + "'");

  // --- mesh ---
  cfg.mesh_dimension = check.integer("mesh.dimension", 1);
  if (cfg.mesh_dimension != 1 && cfg.mesh_dimension != 2)
    check.fail("mesh.dimension", "must be 1 or 2");
  cfg.mesh_resolution = check.integer("mesh.resolution", 0);
  if (check.has("mesh.resolution")) {
    if (cfg.mesh_dimension == 1 && cfg.mesh_resolution < 8)
      check.fail("mesh.resolution", "a closed curve needs at least 8 nodes");
    if (cfg.mesh_dimension == 2 &&
        (cfg.mesh_resolution < 1 || cfg.mesh_resolution > 7))
      check.fail("mesh.resolution", "surface subdivision must lie in 1..7");
  }

  const int ambient = cfg.mesh_dimension + 1;
  if (cfg.norm_family == "quadratic") {
    if (!check.has("norm.matrix")) {
      check.fail("norm.matrix", "missing (required for the quadratic family)");
    } else {
      const std::vector<std::string> parts = split(check.get("norm.matrix"), ',');
      const int need = ambient * ambient;
      bool ok = static_cast<int>(parts.size()) == need;
      std::vector<double> entries;
      for (const std::string& p : parts) {
        double v = 0.0;
        if (!parse_double(p, &v)) ok = false;
        entries.push_back(v);
      }
      if (!ok) {
        check.fail("norm.matrix",
                   "expected " + std::to_string(need) +
                       " comma-separated numbers (row-major " +
                       std::to_string(ambient) + "x" + std::to_string(ambient) + ")");
      } else {
        cfg.norm_matrix = Mat(ambient, ambient);
        for (int i = 0; i < ambient; ++i)
          for (int j = 0; j < ambient; ++j)
            cfg.norm_matrix(i, j) = entries[i * ambient + j];
      }
    }
  } else if (check.has("norm.matrix")) {
    check.fail("norm.matrix", "only valid with norm.family = quadratic");
  }

  if (cfg.norm_family == "quartic") {
    if (!check.has("norm.delta"))
      check.fail("norm.delta", "missing (required for the quartic family)");
    cfg.norm_delta = check.number("norm.delta", 0.0);
  } else if (check.has("norm.delta")) {
    check.fail("norm.delta", "only valid with norm.family = quartic");
  }

  // --- curvature ---
  cfg.curvature_source = check.has("curvature.source") ? check.get("curvature.source")
                                                       : "constant";
  const bool source_known = cfg.curvature_source == "constant" ||
                            cfg.curvature_source == "file" ||
                            cfg.curvature_source == "body";
  if (!source_known)
    check.fail("curvature.source",
               "unknown source '" + cfg.curvature_source + "' (constant, file or body)");
  const std::pair<const char*, const char*> source_keys[] = {
      {"curvature.constant", "constant"},
      {"curvature.file", "file"},
      {"curvature.body", "body"},
      {"curvature.axes", "body"}};
  for (const auto& [key, owner] : source_keys) {
    if (source_known && check.has(key) && cfg.curvature_source != owner)
      check.fail(key, std::string("inactive for curvature.source = ") +
                          cfg.curvature_source);
  }
  if (cfg.curvature_source == "constant") {
    cfg.curvature_constant = check.number("curvature.constant", 1.0);
    if (!(cfg.curvature_constant > 0.0))
      check.fail("curvature.constant", "must be positive");
  } else if (cfg.curvature_source == "file") {
    cfg.curvature_file = check.get("curvature.file");
    if (cfg.curvature_file.empty()) {
      check.fail("curvature.file", "missing (required for curvature.source = file)");
    } else if (!std::ifstream(cfg.curvature_file)) {
      check.fail("curvature.file", "cannot read '" + cfg.curvature_file + "'");
    }
  } else if (cfg.curvature_source == "body") {
    cfg.curvature_body = check.get("curvature.body");
    const int want_axes = cfg.curvature_body == "ellipse" ? 2 : 3;
    if (cfg.curvature_body != "ellipse" && cfg.curvature_body != "ellipsoid") {
      check.fail("curvature.body", "unknown body '" + cfg.curvature_body +
                                       "' (ellipse or ellipsoid)");
    } else {
      const int need_dim = cfg.curvature_body == "ellipse" ? 1 : 2;
      if (cfg.mesh_dimension != need_dim)
        check.fail("curvature.body", cfg.curvature_body + " requires mesh.dimension = " +
                                         std::to_string(need_dim));
      if (cfg.norm_family != "euclidean" && family_known)
        check.fail("curvature.body",
                   "synthetic bodies are defined for the euclidean norm only");
    }
    if (!check.has("curvature.axes")) {
      check.fail("curvature.axes", "missing (required for curvature.source = body)");
    } else {
      bool ok = true;
      for (const std::string& p : split(check.get("curvature.axes"), ',')) {
        double v = 0.0;
        if (!parse_double(p, &v) || !(v > 0.0)) ok = false;
        cfg.curvature_axes.push_back(v);
      }
      if (!ok || (cfg.curvature_body == "ellipse" || cfg.curvature_body == "ellipsoid"
                      ? static_cast<int>(cfg.curvature_axes.size()) != want_axes
                      : false))
        check.fail("curvature.axes",
                   "expected " + std::to_string(want_axes) + " positive semi-axes");
    }
  }

  // --- solver ---
  cfg.solver.tol = check.number("solver.tol", cfg.solver.tol);
  if (!(cfg.solver.tol > 0.0)) check.fail("solver.tol", "must be positive");
  cfg.solver.max_newton = check.integer("solver.max_newton", cfg.solver.max_newton);
  if (cfg.solver.max_newton < 1) check.fail("solver.max_newton", "must be at least 1");
  if (check.has("solver.closure_tol")) {
    cfg.solver.closure_tol = check.number("solver.closure_tol", cfg.solver.closure_tol);
    if (!(cfg.solver.closure_tol > 0.0))
      check.fail("solver.closure_tol", "must be positive");
  }
  cfg.solver.t_step_init = check.number("solver.t_step_init", cfg.solver.t_step_init);
  if (!(cfg.solver.t_step_init > 0.0 && cfg.solver.t_step_init <= 1.0))
    check.fail("solver.t_step_init", "must lie in (0, 1]");

  // --- output ---
  if (check.has("output.dir")) cfg.output_dir = check.get("output.dir");
  if (cfg.output_dir.empty()) check.fail("output.dir", "must not be empty");
  if (check.has("output.formats")) {
    for (const std::string& f : split(check.get("output.formats"), ',')) {
      if (f != "obj" && f != "csv" && f != "json") {
        check.fail("output.formats", "unknown format '" + f + "'");
        continue;
      }
      if (f == "obj" && cfg.mesh_dimension == 1)
        check.fail("output.formats", "obj export needs mesh.dimension = 2");
      if (f == "csv" && cfg.mesh_dimension == 2)
        check.fail("output.formats", "csv export is the curve format (mesh.dimension = 1)");
      if (std::find(cfg.output_formats.begin(), cfg.output_formats.end(), f) !=
          cfg.output_formats.end())
        check.fail("output.formats", "format '" + f + "' listed twice");
      cfg.output_formats.push_back(f);
    }
  } else {
    cfg.output_formats = cfg.mesh_dimension == 1
                             ? std::vector<std::string>{"csv", "json"}
                             : std::vector<std::string>{"obj", "json"};
  }

  check.finish();
  return cfg;
}

NormModel make_model(const RunConfig& cfg) {
  const int ambient = cfg.mesh_dimension + 1;
  if (cfg.norm_family == "euclidean") return NormModel::euclidean(ambient);
  if (cfg.norm_family == "quadratic") return NormModel::quadratic(cfg.norm_matrix);
  return NormModel::quartic(ambient, cfg.norm_delta);
}

int effective_resolution(const RunConfig& cfg) {
  if (cfg.mesh_resolution > 0) return cfg.mesh_resolution;
  return cfg.mesh_dimension == 1 ? 256 : 3;
}

}  // namespace amink
