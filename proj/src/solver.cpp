#include "amink/solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "amink/errors.hpp"

namespace amink {

namespace {

void check_field(const WulffMesh& mesh, const ScalarField& f) {
  if (f.mesh_id != mesh.id() || f.values.size() != static_cast<Eigen::Index>(mesh.size()))
    throw MeshMismatch();
}

void check_positive_K(const WulffMesh& mesh, const ScalarField& K) {
  check_field(mesh, K);
  for (Eigen::Index a = 0; a < K.values.size(); ++a)
    if (!(K.values[a] > 0.0)) throw NonPositiveK("prescribed curvature must be positive nodewise");
}

Mat adjugate(const Mat& U) {
  const int n = static_cast<int>(U.rows());
  if (n == 1) {
    Mat a(1, 1);
    a(0, 0) = 1.0;
    return a;
  }
  Mat a(2, 2);
  a << U(1, 1), -U(0, 1), -U(1, 0), U(0, 0);
  return a;
}

// Lowered form of -1/2 Q_ij^k: the coefficient of the gradient inside U(S).
// q_coef(i,j,k) = g^{kl} Q_ijl.
double raised_Q(const WulffMesh& mesh, std::size_t a, int i, int j, int k) {
  double v = 0.0;
  for (int l = 0; l < mesh.dim(); ++l) v += mesh.g_inv[a](k, l) * mesh.Q_chart[a](i, j, l);
  return v;
}

struct SaddleSolve {
  Vec delta;      // field update
  Vec multiplier; // kernel-constraint multipliers
};

SaddleSolve solve_saddle(const WulffMesh& mesh, const SpMat& L, const Vec& rhs) {
  const int N = static_cast<int>(mesh.size());
  const int d = mesh.ambient();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(L.nonZeros() + 2 * N * d);
  for (int k = 0; k < L.outerSize(); ++k)
    for (SpMat::InnerIterator it(L, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int alpha = 0; alpha < d; ++alpha)
    for (int a = 0; a < N; ++a) {
      const double c = mesh.ambient_DF[a][alpha] * mesh.mu_weight[a];
      trip.emplace_back(N + alpha, a, c);
      trip.emplace_back(a, N + alpha, c);
    }
  SpMat M(N + d, N + d);
  M.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<SpMat> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw LinearSolveFailure("saddle factorization failed");
  Vec full_rhs = Vec::Zero(N + d);
  full_rhs.head(N) = rhs;
  Vec sol = lu.solve(full_rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite())
    throw LinearSolveFailure("saddle backsolve failed");
  return SaddleSolve{sol.head(N), sol.tail(d)};
}

double sup_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

void fill_diagnostics(const WulffMesh& mesh, const ScalarField& S, SolveReport* report) {
  const FieldDerivatives d = differentiate(mesh, S);
  report->sup_S = sup_norm(S.values);
  double sg = 0.0, sh = 0.0;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    sg = std::max(sg, std::sqrt(d.grad[a].dot(mesh.g_inv[a] * d.grad[a])));
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(d.hess[a], mesh.g[a]);
    sh = std::max(sh, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  report->sup_grad_S = sg;
  report->sup_hess_S = sh;
}

}  // namespace

AdmissibleState assemble_state(const WulffMesh& mesh, const ScalarField& S) {
  check_field(mesh, S);
  const int n = mesh.dim();
  const FieldDerivatives d = differentiate(mesh, S);

  AdmissibleState state;
  state.mesh_id = mesh.id();
  state.S = S.values;
  state.U.resize(mesh.size());
  state.radii.resize(mesh.size());
  bool admissible = true;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    Mat U = d.hess[a] + S.values[a] * mesh.g[a];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double q = 0.0;
        for (int k = 0; k < n; ++k) q += raised_Q(mesh, a, i, j, k) * d.grad[a][k];
        U(i, j) -= 0.5 * q;
      }
    U = 0.5 * (U + U.transpose());
    state.U[a] = U;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(U, mesh.g[a]);
    state.radii[a] = eig.eigenvalues();
    if (!(state.radii[a].minCoeff() > 0.0)) admissible = false;
  }
  state.admissible = admissible;
  return state;
}

ScalarField residual_field(const WulffMesh& mesh, const AdmissibleState& state,
                           const ScalarField& K) {
  if (state.mesh_id != mesh.id()) throw MeshMismatch();
  check_positive_K(mesh, K);
  if (!state.admissible)
    throw Inadmissible("residual is undefined at an inadmissible state");
  Vec r(mesh.size());
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    // log det(g^{-1} U) as the sum of log principal radii
    double logdet = 0.0;
    for (int i = 0; i < mesh.dim(); ++i) logdet += std::log(state.radii[a][i]);
    r[a] = logdet + std::log(K.values[a]);
  }
  return ScalarField{mesh.id(), std::move(r)};
}

SpMat linearized_operator(const WulffMesh& mesh, const AdmissibleState& state) {
  if (state.mesh_id != mesh.id()) throw MeshMismatch();
  if (!state.admissible)
    throw Inadmissible("linearization requires an admissible state");
  const int n = mesh.dim();
  const int N = static_cast<int>(mesh.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(N) * (n == 1 ? 5 : 20));

  for (int a = 0; a < N; ++a) {
    const Stencil& st = mesh.stencil[a];
    const int m = static_cast<int>(st.cols.size());
    // Raised-index cofactor of the radii determinant: adj(U)/det g equals
    // det(g^{-1}U) U^{-1}, the derivative of det(g^{-1}U) w.r.t. U entries.
    // Only this index placement pairs symmetrically against the measure.
    const Mat adj = adjugate(state.U[a]) / mesh.g[a].determinant();

    // Cofactor contraction of the U-linearization, as weights over the
    // stencil samples (acting on deviations from the node value).
    Vec coef = Vec::Zero(m);
    const int pairs = n * (n + 1) / 2;
    for (int p = 0; p < pairs; ++p) {
      int i, j;
      if (n == 1) {
        i = 0; j = 0;
      } else {
        i = (p == 2) ? 1 : 0;
        j = (p == 0) ? 0 : 1;
      }
      const double factor = (i == j) ? adj(i, j) : 2.0 * adj(i, j);
      // second-derivative block, Christoffel-corrected
      for (int c = 0; c < m; ++c) coef[c] += factor * st.w2(p, c);
      for (int k = 0; k < n; ++k) {
        const double gamma = mesh.gamma[a](k, i, j);
        for (int c = 0; c < m; ++c) coef[c] -= factor * gamma * st.w1(k, c);
      }
      // gradient block from the cubic tensor
      for (int k = 0; k < n; ++k) {
        const double q = 0.5 * raised_Q(mesh, a, i, j, k);
        for (int c = 0; c < m; ++c) coef[c] -= factor * q * st.w1(k, c);
      }
    }

    double diag = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) diag += adj(i, j) * mesh.g[a](i, j);

    // Deviation form: off-node samples enter directly, the node pays their sum.
    double self = diag;
    for (int c = 1; c < m; ++c) {
      trip.emplace_back(a, st.cols[c], coef[c]);
      self -= coef[c];
    }
    trip.emplace_back(a, a, self);
  }

  SpMat L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

double self_adjointness_defect(const WulffMesh& mesh, const AdmissibleState& state,
                               const ScalarField& v, const ScalarField& w) {
  check_field(mesh, v);
  check_field(mesh, w);
  const SpMat L = linearized_operator(mesh, state);
  const Vec Lv = L * v.values;
  const Vec Lw = L * w.values;
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    a += w.values[k] * Lv[k] * mesh.mu_weight[k];
    b += v.values[k] * Lw[k] * mesh.mu_weight[k];
  }
  return std::abs(a - b);
}

Vec kernel_moments(const WulffMesh& mesh, const ScalarField& S) {
  check_field(mesh, S);
  Vec m = Vec::Zero(mesh.ambient());
  for (std::size_t a = 0; a < mesh.size(); ++a)
    m += S.values[a] * mesh.mu_weight[a] * mesh.ambient_DF[a];
  return m;
}

ScalarField enforce_ortho(const WulffMesh& mesh, const ScalarField& S) {
  check_field(mesh, S);
  const int d = mesh.ambient();
  Mat gram = Mat::Zero(d, d);
  for (std::size_t a = 0; a < mesh.size(); ++a)
    gram += mesh.mu_weight[a] * mesh.ambient_DF[a] * mesh.ambient_DF[a].transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff()))
    throw SingularGram();
  const Vec c = eig.eigenvectors() *
                (eig.eigenvalues().cwiseInverse().asDiagonal() *
                 (eig.eigenvectors().transpose() * kernel_moments(mesh, S)));
  Vec out = S.values;
  for (std::size_t a = 0; a < mesh.size(); ++a) out[a] -= c.dot(mesh.ambient_DF[a]);
  return ScalarField{mesh.id(), std::move(out)};
}

ScalarField newton_solve(const WulffMesh& mesh, const ScalarField& K, const ScalarField& S0,
                         const SolveOptions& opts, SolveReport* report) {
  check_positive_K(mesh, K);
  check_field(mesh, S0);

  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};

  ScalarField S{mesh.id(), S0.values};
  AdmissibleState state = assemble_state(mesh, S);
  if (!state.admissible)
    throw AdmissibilityLost("start state is inadmissible (iteration 0)");

  ScalarField r = residual_field(mesh, state, K);
  double rnorm = sup_norm(r.values);

  bool converged = rnorm <= opts.tol;
  int it = 0;
  while (!converged && it < opts.max_newton) {
    const SpMat L = linearized_operator(mesh, state);
    Vec rhs(mesh.size());
    for (std::size_t a = 0; a < mesh.size(); ++a) {
      // Newton target in log form: L delta = -r * det(g^{-1}U).
      double det_rel = 1.0;
      for (int i = 0; i < mesh.dim(); ++i) det_rel *= state.radii[a][i];
      rhs[a] = -r.values[a] * det_rel;
    }
    const SaddleSolve sys = solve_saddle(mesh, L, rhs);

    // Backtrack: keep admissibility and demand a residual decrease.
    double step = 1.0;
    bool accepted = false;
    while (step >= std::ldexp(1.0, -20)) {
      ScalarField S_try{mesh.id(), S.values + step * sys.delta};
      AdmissibleState state_try = assemble_state(mesh, S_try);
      if (state_try.admissible) {
        ScalarField r_try = residual_field(mesh, state_try, K);
        const double rn_try = sup_norm(r_try.values);
        if (rn_try <= rnorm * (1.0 - 1e-4 * step)) {
          S = std::move(S_try);
          state = std::move(state_try);
          r = std::move(r_try);
          rnorm = rn_try;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
      ++rep.line_search_halvings;
    }
    ++it;
    if (!accepted)
      throw AdmissibilityLost("no admissible decreasing step found (iteration " +
                              std::to_string(it) + ")");
    converged = rnorm <= opts.tol;
  }
  if (!converged)
    throw MaxIterations("newton iteration cap reached with residual " + std::to_string(rnorm));

  ScalarField out = enforce_ortho(mesh, S);
  AdmissibleState post = assemble_state(mesh, out);
  if (post.admissible) {
    state = std::move(post);
  } else {
    out = S;  // keep the pre-projection iterate
  }

  rep.converged = true;
  rep.newton_iterations_total = it;
  rep.final_residual_inf = sup_norm(residual_field(mesh, state, K).values);
  rep.ortho_residual = kernel_moments(mesh, out);
  rep.bounds = apriori_bounds(mesh, K);
  fill_diagnostics(mesh, out, &rep);
  return out;
}

ScalarField continuation_solve(const WulffMesh& mesh, const ScalarField& K,
                               const SolveOptions& opts, SolveReport* report) {
  check_positive_K(mesh, K);

  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};

  Vec f = K.values.cwiseInverse();
  const double I0 = mesh.mu_weight.dot(f);
  const double gate = opts.closure_tol < 0.0 ? 1e-6 * I0 : opts.closure_tol;
  const Vec closure = closure_residual(mesh, ScalarField{mesh.id(), f});
  if (sup_norm(closure) > gate)
    throw ClosureViolated("curvature violates the solvability moments: max |component| = " +
                          std::to_string(sup_norm(closure)) + " > " + std::to_string(gate));

  ScalarField S = mesh.constant_field(1.0);
  double t = 0.0;
  double step = opts.t_step_init;
  const double min_step = std::ldexp(1.0, -12);
  int total_iters = 0;
  int halvings = 0;
  SolveReport inner;

  // The homotopy starts at the known unit-curvature solution; when the target
  // is already met there, return in a single step.
  {
    const AdmissibleState start = assemble_state(mesh, S);
    const double r0 = sup_norm(residual_field(mesh, start, K).values);
    if (r0 <= opts.tol) {
      t = 1.0;
      inner.final_residual_inf = r0;
      rep.continuation.push_back(ContinuationStep{1.0, 0, r0});
    }
  }

  while (t < 1.0) {
    const double t_try = std::min(1.0, t + step);
    Vec Kt(mesh.size());
    for (std::size_t a = 0; a < mesh.size(); ++a)
      Kt[a] = 1.0 / (t_try * f[a] + (1.0 - t_try));
    bool ok = true;
    ScalarField S_next{0, Vec()};
    try {
      S_next = newton_solve(mesh, ScalarField{mesh.id(), Kt}, S, opts, &inner);
    } catch (const AdmissibilityLost&) {
      ok = false;
    } catch (const MaxIterations&) {
      ok = false;
    }
    if (ok) {
      t = t_try;
      S = std::move(S_next);
      total_iters += inner.newton_iterations_total;
      halvings += inner.line_search_halvings;
      rep.continuation.push_back(
          ContinuationStep{t, inner.newton_iterations_total, inner.final_residual_inf});
      if (inner.newton_iterations_total <= 3) step *= 2.0;
    } else {
      step *= 0.5;
      if (step < min_step)
        throw ContinuationStalled("homotopy step collapsed below 2^-12 at t = " +
                                  std::to_string(t));
    }
  }

  rep.converged = true;
  rep.newton_iterations_total = total_iters;
  rep.line_search_halvings = halvings;
  rep.final_residual_inf = inner.final_residual_inf;
  rep.ortho_residual = kernel_moments(mesh, S);
  rep.bounds = apriori_bounds(mesh, K);
  fill_diagnostics(mesh, S, &rep);
  return S;
}

SolveBounds apriori_bounds(const WulffMesh& mesh, const ScalarField& K) {
  check_positive_K(mesh, K);
  const int n = mesh.dim();
  const Vec f = K.values.cwiseInverse();

  const double area = mesh.mu_weight.sum();
  const double I0 = mesh.mu_weight.dot(f);

  double I1 = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < mesh.size(); ++b) {
    const Vec& y = mesh.z[b];
    double s = 0.0;
    for (std::size_t a = 0; a < mesh.size(); ++a)
      s += f[a] * mesh.mu_weight[a] * std::max(0.0, mesh.ambient_DF[a].dot(y));
    I1 = std::min(I1, s);
  }

  const double exponent = (n + 1.0) / n;
  SolveBounds bounds;
  bounds.m2 = 2.0 * std::pow(area, -1.0 / n) * std::pow(I0, exponent) / I1;
  bounds.m1 = (4.0 / (n + 1.0)) * std::pow(area, -1.0 / n) * std::pow(I1, exponent) / I0;
  return bounds;
}

}  // namespace amink
