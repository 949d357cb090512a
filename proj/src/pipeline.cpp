#include "amink/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <system_error>

#include "amink/errors.hpp"

namespace amink {

namespace fs = std::filesystem;

namespace {

// Shortest round-trippable decimal form; non-finite values become JSON null.
std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string json_vec(const Vec& v) {
  std::string out = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

std::string json_check(const InequalityCheck& c) {
  return "{\"lhs\": " + num(c.lhs) + ", \"rhs\": " + num(c.rhs) +
         ", \"pass\": " + (c.pass ? "true" : "false") + "}";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

bool wants_format(const RunConfig& cfg, const std::string& f) {
  for (const std::string& e : cfg.output_formats)
    if (e == f) return true;
  return false;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t\r");
    const auto e = item.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

ScalarField curvature_from_file(const RunConfig& cfg, const WulffMesh& mesh) {
  std::ifstream in(cfg.curvature_file);
  if (!in) throw IoError("cannot read curvature file '" + cfg.curvature_file + "'");
  const std::string where = "curvature file '" + cfg.curvature_file + "'";
  Vec values(mesh.size());
  std::string line;
  std::size_t row = 0;
  int lineno = 0;
  bool maybe_header = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 2)
      throw ConfigError(where + " line " + std::to_string(lineno) +
                        ": expected 'node_index,K_value'");
    if (maybe_header) {
      maybe_header = false;
      char* end = nullptr;
      std::strtol(fields[0].c_str(), &end, 10);
      if (end == fields[0].c_str()) continue;  // optional header row
    }
    std::size_t idx = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      idx = std::stoul(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
      value = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument(fields[1]);
    } catch (const std::exception&) {
      throw ConfigError(where + " line " + std::to_string(lineno) +
                        ": cannot parse '" + line + "'");
    }
    if (row >= mesh.size())
      throw ConfigError(where + ": more rows than the mesh has nodes (" +
                        std::to_string(mesh.size()) + ")");
    if (idx != row)
      throw ConfigError(where + " line " + std::to_string(lineno) +
                        ": node index " + std::to_string(idx) + ", expected " +
                        std::to_string(row));
    if (!(value > 0.0) || !std::isfinite(value))
      throw ConfigError(where + " line " + std::to_string(lineno) +
                        ": curvature must be positive and finite");
    values[static_cast<int>(row++)] = value;
  }
  if (row != mesh.size())
    throw ConfigError(where + ": " + std::to_string(row) + " rows for " +
                      std::to_string(mesh.size()) + " mesh nodes");
  return mesh.field(values);
}

// Gauss curvature of an axis-aligned ellipse/ellipsoid as a function of the
// outward unit normal; valid for the Euclidean norm (validation enforces it).
ScalarField curvature_from_body(const RunConfig& cfg, const WulffMesh& mesh) {
  Vec values(mesh.size());
  double prod = 1.0;
  for (double a : cfg.curvature_axes) prod *= a;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    double s2 = 0.0;
    for (int i = 0; i < mesh.ambient(); ++i)
      s2 += cfg.curvature_axes[i] * cfg.curvature_axes[i] * mesh.nu[a][i] *
            mesh.nu[a][i];
    const double s = std::sqrt(s2);
    const double pw = cfg.curvature_body == "ellipse" ? s * s * s : s2 * s2;
    values[static_cast<int>(a)] = pw / (prod * prod);
  }
  return mesh.field(values);
}

ScalarField make_curvature(const RunConfig& cfg, const WulffMesh& mesh) {
  if (cfg.curvature_source == "constant")
    return mesh.constant_field(cfg.curvature_constant);
  if (cfg.curvature_source == "file") return curvature_from_file(cfg, mesh);
  return curvature_from_body(cfg, mesh);
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ClosureViolated*>(&e)) return kExitClosure;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidModel*>(&e) ||
      dynamic_cast<const MeshBuildFailure*>(&e) ||
      dynamic_cast<const NonPositiveK*>(&e))
    return kExitConfig;
  return kExitSolver;
}

double parameter_angle(const Vec& nu) {
  double th = std::atan2(nu[1], nu[0]);
  if (th < 0.0) th += 2.0 * std::acos(-1.0);
  return th;
}

void write_curve_csv(const std::string& path, const WulffMesh& mesh, const Vec& v,
                     RunResult& result) {
  std::string text;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    text += num(parameter_angle(mesh.nu[a]));
    text += ',';
    text += num(v[static_cast<int>(a)]);
    text += '\n';
  }
  result.artifacts.push_back(path);
  write_file(path, text);
}

}  // namespace

void export_artifacts(const RunConfig& cfg, const WulffMesh& mesh, const ScalarField& S,
                      const ScalarField& K, const BodyMesh& body, RunResult& result) {
  const fs::path outdir(cfg.output_dir);
  if (body.dim == 1 && wants_format(cfg, "csv")) {
    // Closed curve; the last node connects back to the first implicitly.
    std::string text;
    for (const Vec& x : body.X) {
      text += num(x[0]);
      text += ',';
      text += num(x[1]);
      text += '\n';
    }
    const std::string path = (outdir / "body.csv").string();
    result.artifacts.push_back(path);
    write_file(path, text);

    std::error_code ec;
    fs::create_directories(outdir / "plots", ec);
    if (ec) throw IoError("cannot create '" + (outdir / "plots").string() + "'");
    write_curve_csv((outdir / "plots" / "support.csv").string(), mesh, S.values, result);
    write_curve_csv((outdir / "plots" / "curvature.csv").string(), mesh, K.values,
                    result);
    write_curve_csv((outdir / "plots" / "curvature_recomputed.csv").string(), mesh,
                    body.recomputed_K, result);
  }
  if (body.dim == 2 && wants_format(cfg, "obj")) {
    std::string text;
    for (const Vec& x : body.X) {
      text += "v " + num(x[0]) + ' ' + num(x[1]) + ' ' + num(x[2]) + '\n';
    }
    for (const auto& t : body.triangles) {
      text += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
              std::to_string(t[2] + 1) + '\n';
    }
    const std::string path = (outdir / "body.obj").string();
    result.artifacts.push_back(path);
    write_file(path, text);
  }
}

std::string render_report_json(const RunConfig& cfg, const RunResult& r) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"exit_code\": " << r.exit_code << ",\n";
  os << "  \"error\": \"" << json_escape(r.error) << "\",\n";
  os << "  \"norm_family\": \"" << json_escape(cfg.norm_family) << "\",\n";
  os << "  \"mesh_dimension\": " << cfg.mesh_dimension << ",\n";
  os << "  \"mesh_resolution\": " << effective_resolution(cfg) << ",\n";
  os << "  \"closure_residual\": " << json_vec(r.closure) << ",\n";
  os << "  \"solve\": {\n";
  os << "    \"converged\": " << (r.solve.converged ? "true" : "false") << ",\n";
  os << "    \"newton_iterations_total\": " << r.solve.newton_iterations_total << ",\n";
  os << "    \"line_search_halvings\": " << r.solve.line_search_halvings << ",\n";
  os << "    \"continuation\": [";
  for (std::size_t i = 0; i < r.solve.continuation.size(); ++i) {
    const ContinuationStep& st = r.solve.continuation[i];
    if (i) os << ", ";
    os << "{\"t\": " << num(st.t) << ", \"iterations\": " << st.iterations
       << ", \"residual\": " << num(st.residual) << "}";
  }
  os << "],\n";
  os << "    \"final_residual_inf\": " << num(r.solve.final_residual_inf) << ",\n";
  os << "    \"ortho_residual\": " << json_vec(r.solve.ortho_residual) << ",\n";
  os << "    \"bounds\": {\"m1\": " << num(r.solve.bounds.m1)
     << ", \"m2\": " << num(r.solve.bounds.m2) << "},\n";
  os << "    \"diagnostics\": {\"sup_S\": " << num(r.solve.sup_S)
     << ", \"sup_grad_S\": " << num(r.solve.sup_grad_S)
     << ", \"sup_hess_S\": " << num(r.solve.sup_hess_S) << "}\n";
  os << "  },\n";
  os << "  \"measures\": {\n";
  os << "    \"volume\": " << num(r.measures.volume) << ",\n";
  os << "    \"aniso_area\": " << num(r.measures.aniso_area) << ",\n";
  os << "    \"r_inner\": " << num(r.measures.r_inner) << ",\n";
  os << "    \"R_outer\": " << num(r.measures.R_outer) << ",\n";
  os << "    \"center_inner\": " << json_vec(r.measures.center_inner) << ",\n";
  os << "    \"center_outer\": " << json_vec(r.measures.center_outer) << "\n";
  os << "  },\n";
  os << "  \"roundtrip_error\": " << num(r.roundtrip_error) << ",\n";
  os << "  \"inequalities\": {\n";
  os << "    \"minkowski_identity\": " << json_check(r.inequalities.minkowski_identity)
     << ",\n";
  os << "    \"isoperimetric\": " << json_check(r.inequalities.isoperimetric) << ",\n";
  os << "    \"andrews_inner_radius\": "
     << json_check(r.inequalities.andrews_inner_radius) << ",\n";
  os << "    \"c0_sandwich\": " << json_check(r.inequalities.c0_sandwich) << "\n";
  os << "  },\n";
  os << "  \"artifacts\": [";
  for (std::size_t i = 0; i < r.artifacts.size(); ++i) {
    if (i) os << ", ";
    os << '"' << json_escape(r.artifacts[i]) << '"';
  }
  os << "]\n";
  os << "}\n";
  return os.str();
}

RunResult run_solve(const RunConfig& cfg) {
  RunResult result;
  std::optional<WulffMesh> mesh;
  ScalarField S, K;
  BodyMesh body;
  bool solved = false;
  try {
    const NormModel model = make_model(cfg);
    mesh.emplace(build_mesh(model, cfg.mesh_dimension, effective_resolution(cfg)));
    K = make_curvature(cfg, *mesh);
    result.closure = closure_residual(*mesh, mesh->field(K.values.cwiseInverse()));
    S = continuation_solve(*mesh, K, cfg.solver, &result.solve);
    body = reconstruct(*mesh, S);
    body_curvature(body, *mesh, model, K, &result.roundtrip_error);
    result.measures = body_measures(body, *mesh, S);
    result.inequalities = inequality_report(*mesh, S, K, body);
    solved = true;
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e);
    result.error = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitSolver;
    result.error = e.what();
  }

  try {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + cfg.output_dir + "'");
    if (solved) export_artifacts(cfg, *mesh, S, K, body, result);
    const std::string report_path = (fs::path(cfg.output_dir) / "report.json").string();
    result.artifacts.push_back(report_path);
    write_file(report_path, render_report_json(cfg, result));
  } catch (const std::exception& e) {
    for (const std::string& p : result.artifacts) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    result.artifacts.clear();
    if (result.exit_code == kExitOk) {
      result.exit_code = kExitIo;
      result.error = e.what();
    }
    // Leave the failure context behind when the directory allows it.
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const std::string report_path = (fs::path(cfg.output_dir) / "report.json").string();
    std::ofstream out(report_path, std::ios::binary);
    if (out) {
      result.artifacts.push_back(report_path);
      out << render_report_json(cfg, result);
    }
  }
  return result;
}

namespace {

void verify_line(std::ostream& os, const char* label, double value, double bound,
                 bool* ok) {
  const bool pass = value <= bound;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "  %-24s %12.5e  %s\n", label, value,
                pass ? "pass" : "FAIL");
  os << buf;
  if (!pass) *ok = false;
}

}  // namespace

int run_verify(const RunConfig& cfg, std::ostream& os) {
  try {
    const NormModel model = make_model(cfg);
    const NormCheckReport rep = model.verify(1000, 0x5eedf00dULL);
    os << "norm contract: " << cfg.norm_family << ", ambient dimension "
       << model.dimension() << ", " << rep.samples << " samples\n";
    bool ok = true;
    verify_line(os, "gradient identity", rep.gradient_identity, 1e-8, &ok);
    verify_line(os, "radial hessian", rep.hessian_radial, 1e-8, &ok);
    verify_line(os, "primal unit level", rep.unit_level_primal, 1e-8, &ok);
    verify_line(os, "dual unit level", rep.unit_level_dual, 1e-8, &ok);
    verify_line(os, "dual inversion", rep.inversion, 1e-8, &ok);
    verify_line(os, "radial third order", rep.radial_third_order, 1e-8, &ok);
    {
      char buf[64];
      const bool pos = rep.min_eig_metric > 0.0;
      std::snprintf(buf, sizeof(buf), "  %-24s %12.5e  %s\n", "metric min eigenvalue",
                    rep.min_eig_metric, pos ? "pass" : "FAIL");
      os << buf;
      if (!pos) ok = false;
    }

    const WulffMesh mesh =
        build_mesh(model, cfg.mesh_dimension, effective_resolution(cfg));
    const GeometryReport geo = geometry_selfcheck(mesh);
    os << "mesh geometry: dimension " << mesh.dim() << ", resolution "
       << mesh.resolution() << ", " << mesh.size() << " nodes\n";
    verify_line(os, "radial cubic", geo.radial_cubic, 1e-8, &ok);
    {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "  %-24s %12.5e\n", "measure density",
                    geo.measure_density);
      os << buf;
      if (geo.gauss_checked) {
        std::snprintf(buf, sizeof(buf), "  %-24s %12.5e\n", "gauss identity",
                      geo.gauss);
        os << buf;
      }
      if (geo.cubic_gradient_checked) {
        std::snprintf(buf, sizeof(buf), "  %-24s %12.5e\n", "cubic slot symmetry",
                      geo.cubic_gradient_symmetry);
        os << buf;
      }
    }
    os << "verdict: " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    os << "verification aborted: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace amink
