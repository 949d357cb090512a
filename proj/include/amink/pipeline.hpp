#pragma once

#include <iosfwd>

#include "amink/body.hpp"
#include "amink/config.hpp"

namespace amink {

// Process exit codes used by the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitClosure = 3,
  kExitSolver = 4,
  kExitIo = 5,
};

struct RunResult {
  int exit_code = kExitOk;
  std::string error;  // empty on success
  Vec closure;        // closure residual of 1/K (when the mesh stage was reached)
  SolveReport solve;
  BodyMeasures measures;
  InequalityReport inequalities;
  double roundtrip_error = 0.0;
  std::vector<std::string> artifacts;  // files written, in order
};

// Full pipeline: model, mesh, curvature, gate, solve, reconstruct, verify,
// export. Never throws; failures are mapped to exit codes and a report.json
// is still written with the failure context. Partial body/plot artifacts are
// removed on failure.
RunResult run_solve(const RunConfig& cfg);

// Norm-contract and mesh-geometry checks only; prints a summary to `os`.
// Returns a process exit code.
int run_verify(const RunConfig& cfg, std::ostream& os);

// Serialization helpers shared by the pipeline and the tests.
std::string render_report_json(const RunConfig& cfg, const RunResult& r);
void export_artifacts(const RunConfig& cfg, const WulffMesh& mesh, const ScalarField& S,
                      const ScalarField& K, const BodyMesh& body, RunResult& result);

}  // namespace amink
