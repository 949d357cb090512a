#pragma once

#include <Eigen/Sparse>
#include <limits>

#include "amink/mesh.hpp"

namespace amink {

using SpMat = Eigen::SparseMatrix<double>;

// Support candidate S together with the curvature tensor U(S) and its
// spectrum. U is the exact affine image of S under the mesh stencils.
struct AdmissibleState {
  std::uint64_t mesh_id = 0;
  Vec S;
  std::vector<Mat> U;     // per-node n x n
  std::vector<Vec> radii; // eigenvalues of g^{-1} U, ascending
  bool admissible = false;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
};

struct ContinuationStep {
  double t = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct SolveBounds {
  double m1 = 0.0;  // lower support bound
  double m2 = 0.0;  // upper support bound
};

struct SolveReport {
  bool converged = false;
  int newton_iterations_total = 0;
  int line_search_halvings = 0;
  std::vector<ContinuationStep> continuation;
  double final_residual_inf = std::numeric_limits<double>::quiet_NaN();
  Vec ortho_residual;  // kernel moments of the returned S
  SolveBounds bounds;
  double sup_S = 0.0;
  double sup_grad_S = 0.0;
  double sup_hess_S = 0.0;
};

struct SolveOptions {
  double tol = 1e-9;
  int max_newton = 50;
  // Closure gate threshold; negative selects the scaled default of
  // 1e-6 times the total measure of 1/K.
  double closure_tol = -1.0;
  double t_step_init = 0.25;
};

AdmissibleState assemble_state(const WulffMesh& mesh, const ScalarField& S);

// Log-form equation residual per node; requires an admissible state and
// positive K.
ScalarField residual_field(const WulffMesh& mesh, const AdmissibleState& state,
                           const ScalarField& K);

// Sparse cofactor-weighted linearization of the curvature determinant at a
// state; its action on v is the directional derivative of det U along
// the affine update map.
SpMat linearized_operator(const WulffMesh& mesh, const AdmissibleState& state);

double self_adjointness_defect(const WulffMesh& mesh, const AdmissibleState& state,
                               const ScalarField& v, const ScalarField& w);

// Kernel moments of S against the measure: the vector of integrals of S
// times each kernel field.
Vec kernel_moments(const WulffMesh& mesh, const ScalarField& S);

// Projection of S onto the complement of the kernel fields in the measure
// inner product. Idempotent.
ScalarField enforce_ortho(const WulffMesh& mesh, const ScalarField& S);

ScalarField newton_solve(const WulffMesh& mesh, const ScalarField& K, const ScalarField& S0,
                         const SolveOptions& opts, SolveReport* report = nullptr);

// Homotopy from the unit-curvature problem to the prescribed K with
// adaptive step control; gates on the closure condition first.
ScalarField continuation_solve(const WulffMesh& mesh, const ScalarField& K,
                               const SolveOptions& opts, SolveReport* report = nullptr);

// Constructive support-function bounds derived from the curvature data alone.
SolveBounds apriori_bounds(const WulffMesh& mesh, const ScalarField& K);

}  // namespace amink
