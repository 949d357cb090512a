#include "amink/body.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace amink {

namespace {

void check_field(const WulffMesh& mesh, const ScalarField& f) {
  if (f.mesh_id != mesh.id() || f.values.size() != static_cast<Eigen::Index>(mesh.size()))
    throw MeshMismatch();
}

void check_body(const WulffMesh& mesh, const BodyMesh& body) {
  if (body.source_mesh_id != mesh.id() || body.X.size() != mesh.size())
    throw MeshMismatch();
}

std::uint64_t fnv1a(const Vec& values) {
  std::uint64_t h = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &values[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c[0] = a[1] * b[2] - a[2] * b[1];
  c[1] = a[2] * b[0] - a[0] * b[2];
  c[2] = a[0] * b[1] - a[1] * b[0];
  return c;
}

// Chart derivatives of every ambient component of the surface map, through
// the one shared differentiation path. Raw (non-covariant) second
// derivatives are restored from the Christoffel correction.
struct SurfaceJet {
  std::vector<Mat> T;                 // ambient x n tangents per node
  std::vector<std::vector<Mat>> H;    // per node, per component: raw d_i d_j X^c
};

SurfaceJet surface_jet(const WulffMesh& mesh, const BodyMesh& body) {
  const int n = mesh.dim();
  const int d = mesh.ambient();
  SurfaceJet jet;
  jet.T.assign(mesh.size(), Mat::Zero(d, n));
  jet.H.assign(mesh.size(), std::vector<Mat>(d, Mat::Zero(n, n)));
  for (int c = 0; c < d; ++c) {
    Vec comp(mesh.size());
    for (std::size_t a = 0; a < mesh.size(); ++a) comp[a] = body.X[a][c];
    const FieldDerivatives deriv = differentiate(mesh, ScalarField{mesh.id(), comp});
    for (std::size_t a = 0; a < mesh.size(); ++a) {
      for (int i = 0; i < n; ++i) jet.T[a](c, i) = deriv.grad[a][i];
      Mat raw = deriv.hess[a];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            raw(i, j) += mesh.gamma[a](k, i, j) * deriv.grad[a][k];
      jet.H[a][c] = raw;
    }
  }
  return jet;
}

double body_scale(const BodyMesh& body) {
  double s = 0.0;
  for (const Vec& x : body.X) s = std::max(s, x.cwiseAbs().maxCoeff());
  return std::max(s, 1.0);
}

// Shared support-function optimisation: extremal scaling t such that the
// translate y + t * (unit body) touches the body, as a function of the
// candidate centre y.
double support_margin(const WulffMesh& mesh, const Vec& S, const Vec& y, bool inner) {
  double m = inner ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    const double v = S[a] - mesh.ambient_DF[a].dot(y);
    m = inner ? std::min(m, v) : std::max(m, v);
  }
  return m;
}

// Best centre over body-node candidates, then pattern-search polish.
std::pair<double, Vec> optimize_center(const WulffMesh& mesh, const BodyMesh& body,
                                       const Vec& S, bool inner) {
  const int d = mesh.ambient();
  Vec best_y = Vec::Zero(d);
  double best = support_margin(mesh, S, best_y, inner);
  const auto better = [&](double v) { return inner ? v > best : v < best; };
  for (const Vec& cand : body.X) {
    const double v = support_margin(mesh, S, cand, inner);
    if (better(v)) {
      best = v;
      best_y = cand;
    }
  }
  double step = std::max(mesh.spacing(), 1e-3);
  while (step > 1e-10) {
    bool moved = false;
    for (int i = 0; i < d; ++i)
      for (double sgn : {1.0, -1.0}) {
        Vec y = best_y;
        y[i] += sgn * step;
        const double v = support_margin(mesh, S, y, inner);
        if (better(v)) {
          best = v;
          best_y = y;
          moved = true;
        }
      }
    if (!moved) step *= 0.5;
  }
  return {best, best_y};
}

}  // namespace

BodyMesh reconstruct(const WulffMesh& mesh, const ScalarField& S) {
  check_field(mesh, S);
  const AdmissibleState state = assemble_state(mesh, S);
  if (!state.admissible)
    throw Inadmissible("support field does not describe a convex body");

  const FieldDerivatives deriv = differentiate(mesh, S);
  BodyMesh body;
  body.source_mesh_id = mesh.id();
  body.provenance = fnv1a(S.values);
  body.dim = mesh.dim();
  body.X.resize(mesh.size());
  body.aniso_normal.resize(mesh.size());
  body.euclid_normal.resize(mesh.size());
  body.recomputed_K = Vec::Constant(mesh.size(), std::numeric_limits<double>::quiet_NaN());
  body.triangles = mesh.triangles;

  for (std::size_t a = 0; a < mesh.size(); ++a) {
    // X = (tangential gradient of S) + S z, with the gradient raised by g.
    const Vec raised = mesh.g_inv[a] * deriv.grad[a];
    body.X[a] = S.values[a] * mesh.z[a] + mesh.tangent[a] * raised;
    body.aniso_normal[a] = mesh.z[a];
    body.euclid_normal[a] = mesh.ambient_DF[a].normalized();
  }
  return body;
}

ScalarField body_curvature(BodyMesh& body, const WulffMesh& mesh, const NormModel& model,
                           const ScalarField& K, double* roundtrip_error) {
  check_body(mesh, body);
  check_field(mesh, K);
  for (Eigen::Index a = 0; a < K.values.size(); ++a)
    if (!(K.values[a] > 0.0))
      throw NonPositiveK("reference curvature must be positive nodewise");

  const int n = mesh.dim();
  const SurfaceJet jet = surface_jet(mesh, body);
  const double scale = body_scale(body);

  Vec recomputed(mesh.size());
  double worst = 0.0;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    // Fitted Euclidean normal from the fitted tangents, oriented outward.
    Vec nu_fit(mesh.ambient());
    if (n == 1) {
      nu_fit[0] = jet.T[a](1, 0);
      nu_fit[1] = -jet.T[a](0, 0);
    } else {
      nu_fit = cross3(jet.T[a].col(0), jet.T[a].col(1));
    }
    const double len = nu_fit.norm();
    if (!(len > 1e-12 * scale))
      throw DegenerateBody("surface fit collapsed at a node");
    nu_fit /= len;
    if (nu_fit.dot(body.euclid_normal[a]) < 0.0) nu_fit = -nu_fit;

    const DualResult dual = model.dual(nu_fit);
    const Mat G = model.metric(dual.point);

    Mat g_fit(n, n), h_fit(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        g_fit(i, j) = jet.T[a].col(i).dot(G * jet.T[a].col(j));
        double hbar = 0.0;
        for (int c = 0; c < mesh.ambient(); ++c)
          hbar -= nu_fit[c] * jet.H[a][c](i, j);
        h_fit(i, j) = hbar / dual.value;
      }

    const double det_g = (n == 1) ? g_fit(0, 0) : g_fit.determinant();
    if (!(det_g > 0.0)) throw DegenerateBody("fitted metric is not positive");
    const double det_h = (n == 1) ? h_fit(0, 0) : h_fit.determinant();
    recomputed[a] = det_h / det_g;
    worst = std::max(worst, std::abs(recomputed[a] - K.values[a]) / K.values[a]);
  }

  body.recomputed_K = recomputed;
  if (roundtrip_error) *roundtrip_error = worst;
  return ScalarField{mesh.id(), std::move(recomputed)};
}

BodyMeasures body_measures(const BodyMesh& body, const WulffMesh& mesh,
                           const ScalarField& S) {
  check_body(mesh, body);
  check_field(mesh, S);
  const double scale = body_scale(body);

  BodyMeasures out;
  if (body.dim == 1) {
    const std::size_t N = mesh.size();
    double area2 = 0.0;
    for (std::size_t a = 0; a < N; ++a) {
      const Vec& p = body.X[a];
      const Vec& q = body.X[(a + 1) % N];
      if ((q - p).norm() <= 1e-12 * scale)
        throw DegenerateBody("coincident neighbouring curve nodes");
      area2 += p[0] * q[1] - q[0] * p[1];
    }
    out.volume = 0.5 * area2;
  } else {
    double vol6 = 0.0;
    for (const auto& tri : body.triangles) {
      const Vec& p = body.X[tri[0]];
      const Vec& q = body.X[tri[1]];
      const Vec& r = body.X[tri[2]];
      const Vec c = cross3(q - p, r - p);
      if (c.norm() <= 1e-14 * scale * scale)
        throw DegenerateBody("collapsed surface triangle");
      vol6 += p.dot(cross3(q, r));
    }
    out.volume = vol6 / 6.0;
  }

  // Surface measure carried over from the parameter body: the determinant
  // factor is the Jacobian of the normal map, so this equals the integral
  // of 1/K for exact solutions.
  const AdmissibleState state = assemble_state(mesh, S);
  double area = 0.0;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    double det = 1.0;
    for (int i = 0; i < mesh.dim(); ++i) det *= state.radii[a][i];
    area += det * mesh.mu_weight[a];
  }
  out.aniso_area = area;

  const auto inner = optimize_center(mesh, body, S.values, true);
  const auto outer = optimize_center(mesh, body, S.values, false);
  out.r_inner = inner.first;
  out.center_inner = inner.second;
  out.R_outer = outer.first;
  out.center_outer = outer.second;
  return out;
}

InequalityReport inequality_report(const WulffMesh& mesh, const ScalarField& S,
                                   const ScalarField& K, const BodyMesh& body) {
  check_field(mesh, S);
  check_field(mesh, K);
  check_body(mesh, body);
  const double slack = 1e-2;
  const int n = mesh.dim();

  const BodyMeasures measures = body_measures(body, mesh, S);
  const SolveBounds bounds = apriori_bounds(mesh, K);

  InequalityReport rep;

  // support integrated against 1/K balances the enclosed volume
  double mixed = 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < mesh.size(); ++a) {
    mixed += S.values[a] / K.values[a] * mesh.mu_weight[a];
    total += mesh.mu_weight[a];
  }
  rep.minkowski_identity.lhs = mixed;
  rep.minkowski_identity.rhs = (n + 1) * measures.volume;
  rep.minkowski_identity.pass =
      std::abs(mixed - rep.minkowski_identity.rhs) <=
      slack * std::max(std::abs(mixed), std::abs(rep.minkowski_identity.rhs));

  // enclosed volume against the area-only bound; equality on the unit body
  rep.isoperimetric.lhs = measures.volume;
  rep.isoperimetric.rhs = std::pow(total, -1.0 / n) *
                          std::pow(measures.aniso_area, (n + 1.0) / n) / (n + 1.0);
  rep.isoperimetric.pass =
      rep.isoperimetric.lhs <= rep.isoperimetric.rhs * (1.0 + slack);

  // inscribed radius dominates the volume-per-area ratio
  rep.andrews_inner_radius.lhs = measures.r_inner;
  rep.andrews_inner_radius.rhs = measures.volume / measures.aniso_area;
  rep.andrews_inner_radius.pass =
      rep.andrews_inner_radius.lhs >= rep.andrews_inner_radius.rhs * (1.0 - slack);

  // support values sit between the a-priori bracket ends
  rep.c0_sandwich.lhs = S.values.minCoeff() - bounds.m1;
  rep.c0_sandwich.rhs = bounds.m2 - S.values.maxCoeff();
  rep.c0_sandwich.pass = rep.c0_sandwich.lhs >= -slack * bounds.m1 &&
                         rep.c0_sandwich.rhs >= -slack * bounds.m2;
  return rep;
}

}  // namespace amink
