#include "amink/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "amink/errors.hpp"

namespace amink {

namespace {

std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

// Differential of the sphere-to-level-set map at a parameter point, given the
// already-solved node. Maps parameter-sphere tangents to level-set tangents.
Mat level_set_differential(const Mat& g_inv, const Vec& z, double dual_value) {
  return (g_inv - z * z.transpose()) / dual_value;
}

double clamp_unit(double t) { return std::min(1.0, std::max(-1.0, t)); }

Vec cross3(const Vec& a, const Vec& b) {
  Vec out(3);
  out << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return out;
}

// Weights act on deviations from the stencil owner's own sample, so constant
// fields are annihilated identically, not merely to rounding.
Vec apply_weights(const Mat& w, const Vec& samples) {
  return w * (samples.array() - samples[0]).matrix();
}

// d exp_p(xi) applied to the chart axis `i`, at chart point xi = t * w.
// p is the chart center on the parameter sphere, tau1/tau2 its frame.
Vec exp_map_frame(const Vec& p, const Vec& tau1, const Vec& tau2, const Eigen::Vector2d& xi,
                  int i) {
  const double t = xi.norm();
  const Vec tau_i = (i == 0) ? tau1 : tau2;
  if (t < 1e-14) return tau_i;
  const Eigen::Vector2d w = xi / t;
  const Vec u = w[0] * tau1 + w[1] * tau2;
  return w[i] * (-std::sin(t) * p + std::cos(t) * u) + (std::sin(t) / t) * (tau_i - w[i] * u);
}

Eigen::Vector2d sphere_log(const Vec& p, const Vec& tau1, const Vec& tau2, const Vec& q) {
  const double c = clamp_unit(p.dot(q));
  const double t = std::acos(c);
  Vec transverse = q - c * p;
  const double norm = transverse.norm();
  if (norm < 1e-14) return Eigen::Vector2d::Zero();
  transverse /= norm;
  return t * Eigen::Vector2d(transverse.dot(tau1), transverse.dot(tau2));
}

double spherical_triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  const double num = std::abs(a.dot(cross3(b, c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

struct IcoSphere {
  std::vector<Vec> verts;
  std::vector<std::array<int, 3>> faces;
};

IcoSphere build_icosphere(int subdivisions) {
  IcoSphere s;
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  for (const auto& r : raw) {
    Vec v(3);
    v << r[0], r[1], r[2];
    s.verts.push_back(v.normalized());
  }
  s.faces = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(s.verts.size());
      s.verts.push_back(((s.verts[a] + s.verts[b]) * 0.5).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(s.faces.size() * 4);
    for (const auto& f : s.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.faces = std::move(next);
  }
  return s;
}

// Scaled cubic monomial basis; second/third-order terms carry the Taylor
// factorials so fitted coefficients read off derivatives directly.
constexpr int kBasisSize = 10;

void fill_basis_row(double x, double y, double* row) {
  row[0] = 1.0;
  row[1] = x;
  row[2] = y;
  row[3] = 0.5 * x * x;
  row[4] = x * y;
  row[5] = 0.5 * y * y;
  row[6] = x * x * x / 6.0;
  row[7] = 0.5 * x * x * y;
  row[8] = 0.5 * x * y * y;
  row[9] = y * y * y / 6.0;
}

// Weighted least-squares derivative weights for one node. `local` holds chart
// coordinates, row 0 the node itself. Outputs w1 (2 x m) and w2 (3 x m,
// rows 11, 12, 22).
void mls_weights(const Mat& local, Mat* w1, Mat* w2) {
  const int m = static_cast<int>(local.rows());
  double radius = 0.0;
  for (int b = 0; b < m; ++b) radius = std::max(radius, local.row(b).norm());
  const double dmax = 1.05 * radius;

  Mat B(m, kBasisSize);
  Vec sqw(m);
  double row[kBasisSize];
  for (int b = 0; b < m; ++b) {
    const double x = local(b, 0) / radius;
    const double y = local(b, 1) / radius;
    fill_basis_row(x, y, row);
    B.row(b) = Eigen::Map<Eigen::RowVectorXd>(row, kBasisSize);
    const double d = local.row(b).norm() / dmax;
    const double wendland = std::pow(1.0 - d, 4) * (1.0 + 4.0 * d);
    sqw[b] = std::sqrt(std::max(wendland, 1e-12));
  }
  Mat Bw = sqw.asDiagonal() * B;
  // Pseudo-inverse rows give the sample weights of each fitted coefficient.
  Eigen::ColPivHouseholderQR<Mat> qr(Bw);
  if (qr.rank() < kBasisSize)
    throw MeshBuildFailure("differentiation stencil is rank deficient");
  Mat pinv = qr.solve(Mat::Identity(m, m)) * sqw.asDiagonal();

  *w1 = pinv.middleRows(1, 2) / radius;
  *w2 = pinv.middleRows(3, 3) / (radius * radius);
  // Force exact annihilation of constants: fold the row sum into the
  // self-weight (column 0 = the node itself).
  for (int r = 0; r < 2; ++r) (*w1)(r, 0) -= w1->row(r).sum();
  for (int r = 0; r < 3; ++r) (*w2)(r, 0) -= w2->row(r).sum();
}

void solve_node(const NormModel& model, const Vec& direction, Vec* z, double* dual_value) {
  try {
    DualResult dual = model.dual(direction);
    *z = dual.point;
    *dual_value = dual.value;
  } catch (const NoConvergence& e) {
    throw MeshBuildFailure(std::string("support evaluation failed during mesh build: ") +
                           e.what());
  }
}

// Chart tensors evaluated at a neighbor but expressed in the chart frame of
// the stencil owner; needed wherever nodal tensors are differenced.
struct PairFrame {
  Mat V;        // ambient x 2, level-set tangents of the owner's axes
  Mat g;        // 2 x 2 metric in the owner's frame
};

PairFrame pair_frame(const WulffMesh& mesh, const Vec& center, const Vec& tau1, const Vec& tau2,
                     int b, const Eigen::Vector2d& xi) {
  PairFrame out;
  const Mat dz =
      level_set_differential(mesh.ambient_G_inv[b], mesh.z[b], mesh.dual_value[b]);
  out.V = Mat(3, 2);
  for (int i = 0; i < 2; ++i)
    out.V.col(i) = dz * exp_map_frame(center, tau1, tau2, xi, i);
  out.g = out.V.transpose() * mesh.ambient_G[b] * out.V;
  return out;
}

}  // namespace

ScalarField WulffMesh::field(Vec values) const {
  if (values.size() != static_cast<Eigen::Index>(size()))
    throw MeshMismatch();
  return ScalarField{id_, std::move(values)};
}

ScalarField WulffMesh::constant_field(double c) const {
  return ScalarField{id_, Vec::Constant(size(), c)};
}

ScalarField WulffMesh::kernel_field(int alpha) const {
  if (alpha < 0 || alpha >= ambient())
    throw Error("kernel field index out of range");
  Vec values(size());
  for (std::size_t a = 0; a < size(); ++a) values[a] = ambient_DF[a][alpha];
  return ScalarField{id_, std::move(values)};
}

void WulffMesh::dump_nodes(std::ostream& os) const {
  for (std::size_t a = 0; a < size(); ++a) {
    os << a;
    for (int c = 0; c < ambient(); ++c) os << ", " << z[a][c];
    os << ", " << mu_weight[a] << "\n";
  }
}

WulffMesh build_mesh(const NormModel& model, int n, int resolution) {
  if (n != 1 && n != 2)
    throw MeshBuildFailure("hypersurface dimension must be 1 or 2");
  if (model.dimension() != n + 1)
    throw MeshBuildFailure("norm dimension does not match the requested mesh dimension");
  if (n == 1 && resolution < 8)
    throw MeshBuildFailure("circle meshes need at least 8 nodes");
  if (n == 2 && resolution < 1)
    throw MeshBuildFailure("sphere meshes need subdivision level at least 1");

  WulffMesh mesh;
  mesh.id_ = next_mesh_id();
  mesh.n_ = n;
  mesh.resolution_ = resolution;

  if (n == 1) {
    const int N = resolution;
    const double h = 2.0 * M_PI / N;
    mesh.spacing_ = h;
    mesh.z.resize(N);
    mesh.nu.resize(N);
    mesh.tangent.resize(N);
    mesh.g.resize(N);
    mesh.g_inv.resize(N);
    mesh.Q_chart.assign(N, Tensor3(1));
    mesh.gamma.assign(N, Tensor3(1));
    mesh.mu_weight.resize(N);
    mesh.density.resize(N);
    mesh.dual_value.resize(N);
    mesh.ambient_DF.resize(N);
    mesh.ambient_G.resize(N);
    mesh.ambient_G_inv.resize(N);
    mesh.ambient_Q.assign(N, Tensor3(2));
    mesh.stencil.resize(N);

    for (int a = 0; a < N; ++a) {
      const double theta = h * a;
      Vec nu(2);
      nu << std::cos(theta), std::sin(theta);
      mesh.nu[a] = nu;
      solve_node(model, nu, &mesh.z[a], &mesh.dual_value[a]);
      mesh.ambient_DF[a] = model.gradient(mesh.z[a]);
      mesh.ambient_G[a] = model.metric(mesh.z[a]);
      mesh.ambient_G_inv[a] = mesh.ambient_G[a].inverse();
      mesh.ambient_Q[a] = model.cubic(mesh.z[a]);

      Vec tau(2);
      tau << -std::sin(theta), std::cos(theta);
      const Mat dz = level_set_differential(mesh.ambient_G_inv[a], mesh.z[a], mesh.dual_value[a]);
      Mat tangent(2, 1);
      tangent.col(0) = dz * tau;
      mesh.tangent[a] = tangent;

      Mat g(1, 1);
      g(0, 0) = tangent.col(0).dot(mesh.ambient_G[a] * tangent.col(0));
      mesh.g[a] = g;
      mesh.g_inv[a] = g.inverse();
      mesh.Q_chart[a](0, 0, 0) =
          mesh.ambient_Q[a].contract(tangent.col(0), tangent.col(0), tangent.col(0));

      // Chart density of the measure: parallelepiped of position and tangent.
      const double rho =
          mesh.z[a][0] * tangent(1, 0) - mesh.z[a][1] * tangent(0, 0);
      mesh.density[a] = rho;
      mesh.mu_weight[a] = rho * h;
    }

    // Periodic 4th-order stencils, node itself first.
    for (int a = 0; a < N; ++a) {
      Stencil st;
      const int am2 = (a - 2 + N) % N, am1 = (a - 1 + N) % N;
      const int ap1 = (a + 1) % N, ap2 = (a + 2) % N;
      st.cols = {a, am2, am1, ap1, ap2};
      st.local = Mat(5, 1);
      st.local << 0.0, -2.0 * h, -h, h, 2.0 * h;
      st.w1 = Mat(1, 5);
      st.w1 << 0.0, 1.0, -8.0, 8.0, -1.0;
      st.w1 /= 12.0 * h;
      st.w2 = Mat(1, 5);
      st.w2 << -30.0, -1.0, 16.0, 16.0, -1.0;
      st.w2 /= 12.0 * h * h;
      mesh.stencil[a] = std::move(st);
    }

    // Christoffel of the 1-D metric from the same stencils on nodal g.
    for (int a = 0; a < N; ++a) {
      const Stencil& st = mesh.stencil[a];
      Vec gsamples(5);
      for (int c = 0; c < 5; ++c) gsamples[c] = mesh.g[st.cols[c]](0, 0);
      const double dg = apply_weights(st.w1, gsamples)[0];
      mesh.gamma[a](0, 0, 0) = 0.5 * dg / mesh.g[a](0, 0);
    }
    return mesh;
  }

  // n == 2: icosphere parameter domain.
  const IcoSphere sphere = build_icosphere(resolution);
  const int N = static_cast<int>(sphere.verts.size());
  mesh.triangles = sphere.faces;

  std::vector<std::set<int>> ring1(N);
  for (const auto& f : sphere.faces)
    for (int e = 0; e < 3; ++e) {
      ring1[f[e]].insert(f[(e + 1) % 3]);
      ring1[f[e]].insert(f[(e + 2) % 3]);
    }

  double max_edge = 0.0;
  for (const auto& f : sphere.faces)
    for (int e = 0; e < 3; ++e)
      max_edge = std::max(
          max_edge, std::acos(clamp_unit(sphere.verts[f[e]].dot(sphere.verts[f[(e + 1) % 3]]))));
  mesh.spacing_ = max_edge;

  mesh.z.resize(N);
  mesh.nu.resize(N);
  mesh.tangent.resize(N);
  mesh.g.resize(N);
  mesh.g_inv.resize(N);
  mesh.Q_chart.assign(N, Tensor3(2));
  mesh.gamma.assign(N, Tensor3(2));
  mesh.mu_weight.resize(N);
  mesh.density.resize(N);
  mesh.dual_value.resize(N);
  mesh.ambient_DF.resize(N);
  mesh.ambient_G.resize(N);
  mesh.ambient_G_inv.resize(N);
  mesh.ambient_Q.assign(N, Tensor3(3));
  mesh.stencil.resize(N);

  std::vector<Vec> tau1(N), tau2(N);
  for (int a = 0; a < N; ++a) {
    const Vec& nu = sphere.verts[a];
    mesh.nu[a] = nu;
    solve_node(model, nu, &mesh.z[a], &mesh.dual_value[a]);
    mesh.ambient_DF[a] = model.gradient(mesh.z[a]);
    mesh.ambient_G[a] = model.metric(mesh.z[a]);
    mesh.ambient_G_inv[a] = mesh.ambient_G[a].inverse();
    mesh.ambient_Q[a] = model.cubic(mesh.z[a]);

    // Deterministic orthonormal frame of the parameter sphere.
    int axis = 0;
    for (int c = 1; c < 3; ++c)
      if (std::abs(nu[c]) < std::abs(nu[axis])) axis = c;
    Vec e = Vec::Zero(3);
    e[axis] = 1.0;
    tau1[a] = (e - e.dot(nu) * nu).normalized();
    tau2[a] = cross3(nu, tau1[a]);

    const Mat dz = level_set_differential(mesh.ambient_G_inv[a], mesh.z[a], mesh.dual_value[a]);
    Mat tangent(3, 2);
    tangent.col(0) = dz * tau1[a];
    tangent.col(1) = dz * tau2[a];
    mesh.tangent[a] = tangent;
    mesh.g[a] = tangent.transpose() * mesh.ambient_G[a] * tangent;
    mesh.g_inv[a] = mesh.g[a].inverse();

    // Contract the ambient cubic onto the tangents; fill sorted triples and
    // mirror so slot symmetry is exact.
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j)
        for (int k = j; k < 2; ++k) {
          const double v =
              mesh.ambient_Q[a].contract(tangent.col(i), tangent.col(j), tangent.col(k));
          mesh.Q_chart[a](i, j, k) = v;
          mesh.Q_chart[a](i, k, j) = v;
          mesh.Q_chart[a](j, i, k) = v;
          mesh.Q_chart[a](j, k, i) = v;
          mesh.Q_chart[a](k, i, j) = v;
          mesh.Q_chart[a](k, j, i) = v;
        }

    mesh.density[a] = mesh.z[a].dot(cross3(tangent.col(0), tangent.col(1)));
  }

  // Measure weights: chart density times the node's share of parameter area.
  Vec sphere_share = Vec::Zero(N);
  for (const auto& f : sphere.faces) {
    const double area =
        spherical_triangle_area(sphere.verts[f[0]], sphere.verts[f[1]], sphere.verts[f[2]]);
    for (int e = 0; e < 3; ++e) sphere_share[f[e]] += area / 3.0;
  }
  for (int a = 0; a < N; ++a) mesh.mu_weight[a] = mesh.density[a] * sphere_share[a];

  // Two-ring least-squares stencils in the node's log-map chart.
  for (int a = 0; a < N; ++a) {
    std::set<int> ring2(ring1[a].begin(), ring1[a].end());
    for (int b : ring1[a]) ring2.insert(ring1[b].begin(), ring1[b].end());
    ring2.erase(a);

    Stencil st;
    st.cols.push_back(a);
    for (int b : ring2) st.cols.push_back(b);
    const int m = static_cast<int>(st.cols.size());
    st.local = Mat(m, 2);
    for (int r = 0; r < m; ++r)
      st.local.row(r) = sphere_log(mesh.nu[a], tau1[a], tau2[a], mesh.nu[st.cols[r]]).transpose();
    mls_weights(st.local, &st.w1, &st.w2);
    mesh.stencil[a] = std::move(st);
  }

  // Christoffels from first derivatives of the metric expressed everywhere in
  // the owner's chart frame.
  for (int a = 0; a < N; ++a) {
    const Stencil& st = mesh.stencil[a];
    const int m = static_cast<int>(st.cols.size());
    Mat gvals(3, m);  // rows: g11, g12, g22 at each stencil node
    for (int r = 0; r < m; ++r) {
      const PairFrame pf = pair_frame(mesh, mesh.nu[a], tau1[a], tau2[a], st.cols[r],
                                      st.local.row(r).transpose());
      gvals(0, r) = pf.g(0, 0);
      gvals(1, r) = pf.g(0, 1);
      gvals(2, r) = pf.g(1, 1);
    }
    Mat dg[2];  // dg[k](i,j) = partial_k g_ij at the node
    for (int k = 0; k < 2; ++k) {
      Vec d = Vec::Zero(3);
      for (int comp = 0; comp < 3; ++comp)
        d[comp] = apply_weights(st.w1, gvals.row(comp).transpose())[k];
      dg[k] = Mat(2, 2);
      dg[k] << d[0], d[1], d[1], d[2];
    }
    Tensor3& gam = mesh.gamma[a];
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double sum = 0.0;
          for (int l = 0; l < 2; ++l)
            sum += mesh.g_inv[a](k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
          gam(k, i, j) = 0.5 * sum;
        }
  }

  return mesh;
}

FieldDerivatives differentiate(const WulffMesh& mesh, const ScalarField& f) {
  if (f.mesh_id != mesh.id()) throw MeshMismatch();
  const int n = mesh.dim();
  const std::size_t N = mesh.size();
  FieldDerivatives out;
  out.grad.resize(N);
  out.hess.resize(N);
  for (std::size_t a = 0; a < N; ++a) {
    const Stencil& st = mesh.stencil[a];
    const int m = static_cast<int>(st.cols.size());
    Vec samples(m);
    for (int r = 0; r < m; ++r) samples[r] = f.values[st.cols[r]];

    Vec grad = apply_weights(st.w1, samples);
    Vec packed = apply_weights(st.w2, samples);  // chart second partials, upper triangle
    Mat hess(n, n);
    if (n == 1) {
      hess(0, 0) = packed[0];
    } else {
      hess << packed[0], packed[1], packed[1], packed[2];
    }
    // Covariant correction.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) hess(i, j) -= mesh.gamma[a](k, i, j) * grad[k];
    out.grad[a] = grad;
    out.hess[a] = 0.5 * (hess + hess.transpose());
  }
  return out;
}

double integrate_mu(const WulffMesh& mesh, const ScalarField& f) {
  if (f.mesh_id != mesh.id()) throw MeshMismatch();
  return mesh.mu_weight.dot(f.values);
}

Vec closure_residual(const WulffMesh& mesh, const ScalarField& f) {
  if (f.mesh_id != mesh.id()) throw MeshMismatch();
  for (Eigen::Index a = 0; a < f.values.size(); ++a)
    if (!(f.values[a] > 0.0))
      throw NonPositiveField("closure residual needs a positive field everywhere");
  Vec out = Vec::Zero(mesh.ambient());
  for (std::size_t a = 0; a < mesh.size(); ++a)
    out += f.values[a] * mesh.mu_weight[a] * mesh.ambient_DF[a];
  return out;
}

GeometryReport geometry_selfcheck(const WulffMesh& mesh) {
  GeometryReport report;
  const int n = mesh.dim();
  const std::size_t N = mesh.size();

  for (std::size_t a = 0; a < N; ++a) {
    const Mat radial = mesh.ambient_Q[a].contract(mesh.z[a]);
    report.radial_cubic = std::max(report.radial_cubic, radial.cwiseAbs().maxCoeff());
  }

  // Density of the measure against the metric volume form; its log-gradient
  // must match the contracted cubic tensor.
  Vec log_phi(N);
  for (std::size_t a = 0; a < N; ++a)
    log_phi[a] = std::log(mesh.density[a] / std::sqrt(mesh.g[a].determinant()));
  const FieldDerivatives dphi = differentiate(mesh, ScalarField{mesh.id(), log_phi});
  for (std::size_t a = 0; a < N; ++a) {
    for (int i = 0; i < n; ++i) {
      double contracted = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) contracted += mesh.g_inv[a](j, k) * mesh.Q_chart[a](i, j, k);
      report.measure_density =
          std::max(report.measure_density, std::abs(dphi.grad[a][i] + 0.5 * contracted));
    }
  }

  if (n == 2) {
    report.gauss_checked = true;
    report.cubic_gradient_checked = true;

    // Frames of the parameter sphere must be rebuilt exactly as in build.
    std::vector<Vec> tau1(N), tau2(N);
    for (std::size_t a = 0; a < N; ++a) {
      const Vec& nu = mesh.nu[a];
      int axis = 0;
      for (int c = 1; c < 3; ++c)
        if (std::abs(nu[c]) < std::abs(nu[axis])) axis = c;
      Vec e = Vec::Zero(3);
      e[axis] = 1.0;
      tau1[a] = (e - e.dot(nu) * nu).normalized();
      tau2[a] = cross3(nu, tau1[a]);
    }

    for (std::size_t a = 0; a < N; ++a) {
      const Stencil& st = mesh.stencil[a];
      const int m = static_cast<int>(st.cols.size());
      Mat gvals(3, m);
      std::array<Vec, 8> qvals;  // Q_ijk fields in the owner's frame
      for (auto& q : qvals) q = Vec(m);
      for (int r = 0; r < m; ++r) {
        const int b = st.cols[r];
        const PairFrame pf =
            pair_frame(mesh, mesh.nu[a], tau1[a], tau2[a], b, st.local.row(r).transpose());
        gvals(0, r) = pf.g(0, 0);
        gvals(1, r) = pf.g(0, 1);
        gvals(2, r) = pf.g(1, 1);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              qvals[i * 4 + j * 2 + k][r] = mesh.ambient_Q[b].contract(
                  pf.V.col(i), pf.V.col(j), pf.V.col(k));
      }

      // Second partials of the metric in the owner's chart.
      double d2g[2][2][3];  // [k][l][component]
      for (int comp = 0; comp < 3; ++comp) {
        const Vec packed = apply_weights(st.w2, gvals.row(comp).transpose());
        d2g[0][0][comp] = packed[0];
        d2g[0][1][comp] = packed[1];
        d2g[1][0][comp] = packed[1];
        d2g[1][1][comp] = packed[2];
      }
      const auto d2 = [&](int k, int l, int i, int j) {
        const int comp = (i == 0 && j == 0) ? 0 : (i == 1 && j == 1) ? 2 : 1;
        return d2g[k][l][comp];
      };

      // R_1212 from the coordinate formula, quadratic Christoffel terms added.
      const int i = 0, j = 1, k = 0, l = 1;
      double r_discrete = 0.5 * (d2(j, k, i, l) + d2(i, l, j, k) - d2(j, l, i, k) -
                                 d2(i, k, j, l));
      for (int mm = 0; mm < 2; ++mm)
        for (int s = 0; s < 2; ++s)
          r_discrete += mesh.g[a](mm, s) * (mesh.gamma[a](mm, j, k) * mesh.gamma[a](s, i, l) -
                                            mesh.gamma[a](mm, j, l) * mesh.gamma[a](s, i, k));

      const Mat& g = mesh.g[a];
      const Mat& gi = mesh.g_inv[a];
      const Tensor3& Q = mesh.Q_chart[a];
      double q_terms = 0.0;
      for (int mm = 0; mm < 2; ++mm)
        for (int s = 0; s < 2; ++s)
          q_terms += 0.25 * gi(mm, s) *
                     (Q(j, k, s) * Q(mm, l, i) - Q(j, l, s) * Q(mm, k, i));
      const double r_closed = g(i, k) * g(j, l) - g(i, l) * g(j, k) + q_terms;
      report.gauss = std::max(report.gauss, std::abs(r_discrete - r_closed));

      // Covariant curl of the cubic tensor across its last two slots.
      double dq[2][8];
      for (int comp = 0; comp < 8; ++comp) {
        const Vec d1 = apply_weights(st.w1, qvals[comp]);
        dq[0][comp] = d1[0];
        dq[1][comp] = d1[1];
      }
      const auto q_at = [&](int ii, int jj, int kk) { return ii * 4 + jj * 2 + kk; };
      const auto cov_dq = [&](int ll, int ii, int jj, int kk) {
        double v = dq[ll][q_at(ii, jj, kk)];
        for (int mmm = 0; mmm < 2; ++mmm) {
          v -= mesh.gamma[a](mmm, ll, ii) * Q(mmm, jj, kk);
          v -= mesh.gamma[a](mmm, ll, jj) * Q(ii, mmm, kk);
          v -= mesh.gamma[a](mmm, ll, kk) * Q(ii, jj, mmm);
        }
        return v;
      };
      for (int ii = 0; ii < 2; ++ii)
        for (int jj = 0; jj < 2; ++jj) {
          const double curl = cov_dq(1, ii, jj, 0) - cov_dq(0, ii, jj, 1);
          report.cubic_gradient_symmetry =
              std::max(report.cubic_gradient_symmetry, std::abs(curl));
        }
    }
  }

  return report;
}

}  // namespace amink
