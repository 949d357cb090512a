#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "amink/errors.hpp"
#include "amink/pipeline.hpp"

using namespace amink;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("amink_cli_" + tag + "_" + std::to_string(++counter));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig cfg_from(const std::string& text) {
  return validate_config(parse_key_values(text, "inline"));
}

std::string violation_message(const std::string& text) {
  try {
    cfg_from(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Positions of the needles inside haystack must be strictly increasing.
void check_ordered(const std::string& haystack, const std::vector<std::string>& needles) {
  std::size_t at = 0;
  for (const std::string& n : needles) {
    const std::size_t pos = haystack.find(n, at);
    INFO("looking for '" << n << "' in:\n" << haystack);
    REQUIRE(pos != std::string::npos);
    at = pos + n.size();
  }
}

std::string unit_curve_csv(int n, double (*k)(double)) {
  std::ostringstream out;
  out << "node_index,K_value\n";
  for (int a = 0; a < n; ++a) {
    const double th = 2.0 * std::acos(-1.0) * a / n;
    out << a << ',' << k(th) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("key value parser handles comments, blanks and ordering") {
  const KeyValues kv = parse_key_values(
      "# leading comment\n"
      "\n"
      "norm.family = euclidean   # trailing comment\n"
      "  mesh.resolution =  64\n"
      "output.dir=somewhere\n",
      "demo");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0].first == "norm.family");
  CHECK(kv[0].second == "euclidean");
  CHECK(kv[1].first == "mesh.resolution");
  CHECK(kv[1].second == "64");
  CHECK(kv[2].first == "output.dir");
  CHECK(kv[2].second == "somewhere");

  CHECK_THROWS_AS(parse_key_values("norm.family euclidean\n", "demo"), ConfigError);
  try {
    parse_key_values("ok = 1\nbroken line\n", "demo");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("demo:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_key_values("two words = 1\n", "demo"), ConfigError);
  CHECK_THROWS_AS(parse_key_values(" = empty\n", "demo"), ConfigError);
}

TEST_CASE("reading a missing config file is an io failure") {
  CHECK_THROWS_AS(read_key_values("/definitely/not/here.conf"), IoError);
}

TEST_CASE("minimal config fills documented defaults") {
  const RunConfig cfg = cfg_from("norm.family = euclidean\n");
  CHECK(cfg.norm_family == "euclidean");
  CHECK(cfg.mesh_dimension == 1);
  CHECK(cfg.mesh_resolution == 0);
  CHECK(effective_resolution(cfg) == 256);
  CHECK(cfg.curvature_source == "constant");
  CHECK(cfg.curvature_constant == 1.0);
  CHECK(cfg.solver.tol == 1e-9);
  CHECK(cfg.solver.max_newton == 50);
  CHECK(cfg.solver.closure_tol == -1.0);
  CHECK(cfg.solver.t_step_init == 0.25);
  CHECK(cfg.output_dir == "out");
  REQUIRE(cfg.output_formats.size() == 2);
  CHECK(cfg.output_formats[0] == "csv");
  CHECK(cfg.output_formats[1] == "json");

  const RunConfig surf = cfg_from("norm.family = euclidean\nmesh.dimension = 2\n");
  CHECK(effective_resolution(surf) == 3);
  REQUIRE(surf.output_formats.size() == 2);
  CHECK(surf.output_formats[0] == "obj");
}

TEST_CASE("validation reports every violation in one stable message") {
  const std::string msg = violation_message(
      "norm.family = quadratic\n"
      "mesh.dimension = 3\n"
      "curvature.file = /nope/missing.csv\n"
      "bogus.key = 1\n");
  REQUIRE_FALSE(msg.empty());
  check_ordered(msg, {"invalid configuration", "bogus.key: unknown key",
                      "mesh.dimension: must be 1 or 2",
                      "norm.matrix: missing",
                      "curvature.file: inactive for curvature.source = constant"});
  // The same input always produces the same message.
  CHECK(msg == violation_message("norm.family = quadratic\n"
                                 "mesh.dimension = 3\n"
                                 "curvature.file = /nope/missing.csv\n"
                                 "bogus.key = 1\n"));
}

TEST_CASE("validation rejects the documented misuse cases") {
  CHECK(violation_message("mesh.resolution = 64\n").find("norm.family: missing") !=
        std::string::npos);
  CHECK(violation_message("norm.family = cubic\n").find("unknown family 'cubic'") !=
        std::string::npos);
  CHECK(violation_message("norm.family = quartic\n").find("norm.delta: missing") !=
        std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nnorm.delta = 0.1\n")
            .find("norm.delta: only valid") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nnorm.matrix = 1,0,0,1\n")
            .find("norm.matrix: only valid") != std::string::npos);
  CHECK(violation_message("norm.family = quadratic\nnorm.matrix = 1,2\n")
            .find("expected 4 comma-separated numbers") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nnorm.family = euclidean\n")
            .find("duplicate key") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nmesh.resolution = 4\n")
            .find("at least 8 nodes") != std::string::npos);
  CHECK(violation_message(
            "norm.family = euclidean\nmesh.dimension = 2\nmesh.resolution = 9\n")
            .find("1..7") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nmesh.resolution = lots\n")
            .find("not an integer ('lots')") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\ncurvature.source = magic\n")
            .find("unknown source 'magic'") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\ncurvature.constant = -2\n")
            .find("curvature.constant: must be positive") != std::string::npos);
  const std::string missing = violation_message(
      "norm.family = euclidean\ncurvature.source = file\ncurvature.file = /nope/k.csv\n");
  CHECK(missing.find("cannot read '/nope/k.csv'") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\ncurvature.source = file\n")
            .find("curvature.file: missing") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\ncurvature.source = body\n"
                          "curvature.body = torus\ncurvature.axes = 1,1\n")
            .find("unknown body 'torus'") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\ncurvature.source = body\n"
                          "curvature.body = ellipse\ncurvature.axes = 2,1,1\n")
            .find("expected 2 positive semi-axes") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nmesh.dimension = 2\n"
                          "curvature.source = body\ncurvature.body = ellipse\n"
                          "curvature.axes = 2,1\n")
            .find("requires mesh.dimension = 1") != std::string::npos);
  CHECK(violation_message("norm.family = quartic\nnorm.delta = 0.2\n"
                          "curvature.source = body\ncurvature.body = ellipse\n"
                          "curvature.axes = 2,1\n")
            .find("euclidean norm only") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nsolver.tol = 0\n")
            .find("solver.tol: must be positive") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nsolver.max_newton = 0\n")
            .find("at least 1") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nsolver.t_step_init = 1.5\n")
            .find("(0, 1]") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\nsolver.closure_tol = -3\n")
            .find("closure_tol: must be positive") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\noutput.dir =\n")
            .find("must not be empty") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\noutput.formats = png\n")
            .find("unknown format 'png'") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\noutput.formats = obj\n")
            .find("obj export needs mesh.dimension = 2") != std::string::npos);
  CHECK(violation_message(
            "norm.family = euclidean\nmesh.dimension = 2\noutput.formats = csv\n")
            .find("csv export is the curve format") != std::string::npos);
  CHECK(violation_message("norm.family = euclidean\noutput.formats = csv,csv\n")
            .find("listed twice") != std::string::npos);
}

TEST_CASE("model construction follows the family keys") {
  const RunConfig e = cfg_from("norm.family = euclidean\nmesh.dimension = 2\n");
  CHECK(make_model(e).dimension() == 3);

  const RunConfig q = cfg_from(
      "norm.family = quadratic\nnorm.matrix = 2, 0.3, 0.3, 1\n");
  const NormModel qm = make_model(q);
  CHECK(qm.dimension() == 2);
  CHECK(qm.matrix()(0, 1) == 0.3);

  const RunConfig p = cfg_from("norm.family = quartic\nnorm.delta = 0.15\n");
  CHECK(make_model(p).delta() == 0.15);

  // Admissibility is still the model's own decision.
  const RunConfig bad = cfg_from(
      "norm.family = quadratic\nnorm.matrix = 1, 5, 5, 1\n");
  CHECK_THROWS_AS(make_model(bad), InvalidModel);
}

TEST_CASE("unit curvature run writes every artifact and passes the checks") {
  TempDir tmp("unit");
  RunConfig cfg = cfg_from("norm.family = euclidean\nmesh.resolution = 64\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult r = run_solve(cfg);
  REQUIRE(r.error == "");
  REQUIRE(r.exit_code == kExitOk);
  CHECK(r.solve.converged);
  CHECK(r.solve.final_residual_inf <= 1e-9);
  CHECK(std::abs(r.solve.sup_S - 1.0) <= 1e-10);
  CHECK(r.inequalities.minkowski_identity.pass);
  CHECK(r.inequalities.isoperimetric.pass);
  CHECK(r.inequalities.andrews_inner_radius.pass);
  CHECK(r.inequalities.c0_sandwich.pass);
  REQUIRE(r.artifacts.size() == 5);
  for (const std::string& p : r.artifacts) CHECK(fs::exists(p));
  CHECK(fs::exists(tmp.path / "out" / "body.csv"));
  CHECK(fs::exists(tmp.path / "out" / "plots" / "support.csv"));
  CHECK(fs::exists(tmp.path / "out" / "plots" / "curvature.csv"));
  CHECK(fs::exists(tmp.path / "out" / "plots" / "curvature_recomputed.csv"));
  const std::string report = slurp((tmp.path / "out" / "report.json").string());
  CHECK(report.find("\"exit_code\": 0") != std::string::npos);
  CHECK(report.find("\"minkowski_identity\"") != std::string::npos);

  // body.csv: one x,y row per node, nothing else.
  std::istringstream body(slurp((tmp.path / "out" / "body.csv").string()));
  std::string line;
  int rows = 0;
  while (std::getline(body, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 1);
  }
  CHECK(rows == 64);
}

TEST_CASE("synthetic ellipse source recovers its support function") {
  TempDir tmp("ellipse");
  RunConfig cfg = cfg_from(
      "norm.family = euclidean\n"
      "mesh.resolution = 256\n"
      "curvature.source = body\n"
      "curvature.body = ellipse\n"
      "curvature.axes = 2, 1\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult r = run_solve(cfg);
  REQUIRE(r.error == "");
  REQUIRE(r.exit_code == kExitOk);
  CHECK(r.solve.converged);
  CHECK(std::abs(r.solve.sup_S - 2.0) <= 1e-3);
  CHECK(std::abs(r.measures.volume - 2.0 * std::acos(-1.0)) <= 1e-2);
  CHECK(std::abs(r.measures.r_inner - 1.0) <= 1e-3);
  CHECK(std::abs(r.measures.R_outer - 2.0) <= 1e-3);
  CHECK(r.roundtrip_error <= 1e-2);
  CHECK(r.inequalities.isoperimetric.pass);
  // Genuine anisotropy: strict isoperimetric slack.
  CHECK(r.inequalities.isoperimetric.rhs >= 1.04 * r.inequalities.isoperimetric.lhs);
}

TEST_CASE("reruns of one configuration are byte identical") {
  TempDir tmp("determinism");
  RunConfig cfg = cfg_from(
      "norm.family = quartic\n"
      "norm.delta = 0.2\n"
      "mesh.resolution = 128\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult first = run_solve(cfg);
  REQUIRE(first.exit_code == kExitOk);
  std::vector<std::pair<std::string, std::string>> snapshot;
  for (const std::string& p : first.artifacts) snapshot.emplace_back(p, slurp(p));
  const RunResult second = run_solve(cfg);
  REQUIRE(second.exit_code == kExitOk);
  REQUIRE(second.artifacts == first.artifacts);
  for (const auto& [path, bytes] : snapshot) CHECK(slurp(path) == bytes);
}

TEST_CASE("curvature files are ingested with strict row checks") {
  TempDir tmp("kfile");
  const std::string good = tmp.file(
      "k.csv", unit_curve_csv(64, +[](double) { return 1.0; }));
  RunConfig cfg = cfg_from(
      "norm.family = euclidean\nmesh.resolution = 64\n"
      "curvature.source = file\ncurvature.file = " + good + "\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult ok = run_solve(cfg);
  REQUIRE(ok.error == "");
  CHECK(ok.exit_code == kExitOk);
  CHECK(std::abs(ok.solve.sup_S - 1.0) <= 1e-9);

  SUBCASE("row count must match the mesh") {
    cfg.curvature_file = tmp.file("short.csv", "0,1\n1,1\n2,1\n");
    const RunResult r = run_solve(cfg);
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error.find("3 rows for 64 mesh nodes") != std::string::npos);
  }
  SUBCASE("node order must be sequential") {
    cfg.curvature_file = tmp.file("perm.csv", [] {
      std::string s = "node_index,K_value\n0,1\n";
      s += "2,1\n";
      for (int a = 2; a < 64; ++a) s += std::to_string(a) + ",1\n";
      return s;
    }());
    const RunResult r = run_solve(cfg);
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error.find("node index 2, expected 1") != std::string::npos);
  }
  SUBCASE("curvature must be positive") {
    std::string s;
    for (int a = 0; a < 64; ++a) s += std::to_string(a) + (a == 7 ? ",-2\n" : ",1\n");
    cfg.curvature_file = tmp.file("neg.csv", s);
    const RunResult r = run_solve(cfg);
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error.find("must be positive") != std::string::npos);
  }
  SUBCASE("garbage rows are named with their line") {
    cfg.curvature_file = tmp.file("bad.csv", "0,1\nnot a row at all\n");
    const RunResult r = run_solve(cfg);
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error.find("line 2") != std::string::npos);
  }
}

TEST_CASE("closure violations exit with code 3 and a full report") {
  TempDir tmp("closure");
  const std::string kfile = tmp.file(
      "k.csv", unit_curve_csv(64, +[](double th) { return 1.0 + 0.5 * std::cos(th); }));
  RunConfig cfg = cfg_from(
      "norm.family = euclidean\nmesh.resolution = 64\n"
      "curvature.source = file\ncurvature.file = " + kfile + "\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult r = run_solve(cfg);
  CHECK(r.exit_code == kExitClosure);
  CHECK(r.error.find("solvability moments") != std::string::npos);
  REQUIRE(r.closure.size() == 2);
  // First moment of 1/(1 + cos(th)/2): analytic value 2*pi*(2/sqrt(3) - 1) * 2.
  const double expected = 4.0 * std::acos(-1.0) * (2.0 / std::sqrt(3.0) - 1.0);
  CHECK(std::abs(std::abs(r.closure[0]) - expected) <= 1e-6);
  CHECK(std::abs(r.closure[1]) <= 1e-12);
  CHECK_FALSE(r.solve.converged);
  REQUIRE(r.artifacts.size() == 1);
  const std::string report = slurp(r.artifacts[0]);
  CHECK(report.find("\"exit_code\": 3") != std::string::npos);
  CHECK(report.find("solvability moments") != std::string::npos);
  CHECK(report.find("\"closure_residual\": [-1.94") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "out" / "body.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "out" / "plots"));
}

TEST_CASE("surface solve writes a watertight obj") {
  TempDir tmp("surface");
  RunConfig cfg = cfg_from(
      "norm.family = quartic\nnorm.delta = 0.2\n"
      "mesh.dimension = 2\nmesh.resolution = 3\n");
  cfg.output_dir = (tmp.path / "out").string();
  const RunResult r = run_solve(cfg);
  REQUIRE(r.error == "");
  REQUIRE(r.exit_code == kExitOk);
  CHECK(std::abs(r.solve.sup_S - 1.0) <= 1e-6);
  const std::string obj = slurp((tmp.path / "out" / "body.obj").string());
  int vertices = 0, faces = 0;
  std::istringstream in(obj);
  std::string line;
  std::set<int> used;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++vertices;
    if (line.rfind("f ", 0) == 0) {
      ++faces;
      std::istringstream fin(line.substr(2));
      int a = 0, b = 0, c = 0;
      REQUIRE(bool(fin >> a >> b >> c));
      for (int idx : {a, b, c}) {
        CHECK(idx >= 1);
        used.insert(idx);
      }
    }
  }
  CHECK(vertices == 642);
  CHECK(faces == 1280);           // closed surface: F = 2V - 4
  CHECK(int(used.size()) == vertices);  // every vertex referenced
}

TEST_CASE("unwritable output directory maps to the io exit code") {
  TempDir tmp("io");
  const std::string blocker = tmp.file("blocker", "");
  RunConfig cfg = cfg_from("norm.family = euclidean\nmesh.resolution = 64\n");
  cfg.output_dir = blocker + "/out";
  const RunResult r = run_solve(cfg);
  CHECK(r.exit_code == kExitIo);
  CHECK_FALSE(r.error.empty());
  CHECK(r.artifacts.empty());
}

TEST_CASE("failed runs render a null-safe report") {
  RunConfig cfg = cfg_from("norm.family = euclidean\n");
  RunResult blank;
  blank.exit_code = kExitSolver;
  blank.error = "synthetic \"quoted\" failure\n";
  const std::string json = render_report_json(cfg, blank);
  CHECK(json.find("\"final_residual_inf\": null") != std::string::npos);
  CHECK(json.find("\\\"quoted\\\"") != std::string::npos);
  CHECK(json.find("\\n") != std::string::npos);
  CHECK(json.find("\"closure_residual\": []") != std::string::npos);
  CHECK(json.find("\"continuation\": []") != std::string::npos);
}

TEST_CASE("verification mode summarizes the norm and mesh checks") {
  const RunConfig cfg = cfg_from("norm.family = quadratic\n"
                                 "norm.matrix = 2, 0.2, 0.2, 1\n"
                                 "mesh.resolution = 64\n");
  std::ostringstream os;
  const int code = run_verify(cfg, os);
  CHECK(code == 0);
  const std::string text = os.str();
  check_ordered(text, {"norm contract: quadratic", "gradient identity",
                       "metric min eigenvalue", "mesh geometry: dimension 1",
                       "radial cubic", "verdict: pass"});
  CHECK(text.find("FAIL") == std::string::npos);
}
