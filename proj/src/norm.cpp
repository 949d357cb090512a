#include "amink/norm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace amink {

namespace {

constexpr double kDualTol = 1e-12;
constexpr int kDualMaxIter = 50;
constexpr double kDeltaEigFloor = 1e-3;
constexpr int kAdmissibilityScan = 10000;

// Deterministic uniform double in [0,1): implementation-defined distributions
// are avoided so reports reproduce across standard libraries.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  double uniform() {
    s_ ^= s_ << 13;
    s_ ^= s_ >> 7;
    s_ ^= s_ << 17;
    return static_cast<double>(s_ >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on explicit uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec direction(int dim) {
    Vec v(dim);
    double n2 = 0.0;
    do {
      for (int i = 0; i < dim; ++i) v[i] = normal();
      n2 = v.squaredNorm();
    } while (n2 < 1e-12);
    return v / std::sqrt(n2);
  }

 private:
  std::uint64_t s_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Direction sweep used by the construction-time convexity scan: dense and
// deterministic, axis directions included explicitly.
std::vector<Vec> scan_directions(int dim, int count) {
  std::vector<Vec> dirs;
  dirs.reserve(count + 2 * dim);
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * M_PI * k / count;
      Vec v(2);
      v << std::cos(t), std::sin(t);
      dirs.push_back(v);
    }
  } else if (dim == 3) {
    // Fibonacci sphere.
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = ga * k;
      Vec v(3);
      v << r * std::cos(a), r * std::sin(a), z;
      dirs.push_back(v);
    }
  } else {
    SampleStream rng(0x51a7e5u);
    for (int k = 0; k < count; ++k) dirs.push_back(rng.direction(dim));
  }
  return dirs;
}

}  // namespace

Mat Tensor3::contract(const Vec& u) const {
  Mat m = Mat::Zero(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) m(j, k) += (*this)(i, j, k) * u[i];
  return m;
}

double Tensor3::contract(const Vec& u, const Vec& v, const Vec& w) const {
  double s = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) s += (*this)(i, j, k) * u[i] * v[j] * w[k];
  return s;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

NormModel NormModel::euclidean(int dim) {
  if (dim < 2) throw InvalidModel("ambient dimension must be at least 2");
  return NormModel(NormFamily::Euclidean, dim, Mat(), 0.0);
}

NormModel NormModel::quadratic(Mat A) {
  if (A.rows() != A.cols() || A.rows() < 2)
    throw InvalidModel("quadratic norm needs a square matrix of dimension >= 2");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + A.cwiseAbs().maxCoeff()))
    throw InvalidModel("quadratic norm matrix must be symmetric");
  Mat S = 0.5 * (A + A.transpose());
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success)
    throw InvalidModel("quadratic norm matrix is not positive definite");
  NormModel m(NormFamily::Quadratic, static_cast<int>(S.rows()), S, 0.0);
  m.A_inv_ = llt.solve(Mat::Identity(S.rows(), S.cols()));
  return m;
}

NormModel NormModel::quartic(int dim, double delta) {
  if (dim < 2) throw InvalidModel("ambient dimension must be at least 2");
  if (delta <= -0.5)
    throw InvalidModel("quartic perturbation strength leaves the convexity window");
  NormModel m(NormFamily::QuarticPerturbed, dim, Mat(), delta);
  double min_eig = std::numeric_limits<double>::infinity();
  for (const Vec& v : scan_directions(dim, kAdmissibilityScan)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m.metric(v), Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    if (min_eig < kDeltaEigFloor) break;
  }
  if (!(min_eig >= kDeltaEigFloor)) {
    std::ostringstream os;
    os << "quartic perturbation delta=" << delta
       << " rejected: sampled metric eigenvalue " << min_eig << " below " << kDeltaEigFloor;
    throw InvalidModel(os.str());
  }
  return m;
}

void NormModel::check_argument(const Vec& x) const {
  if (x.size() != dim_) throw InvalidModel("argument dimension does not match the model");
  if (x.squaredNorm() == 0.0) throw ZeroVector();
}

double NormModel::value(const Vec& x) const {
  check_argument(x);
  switch (family_) {
    case NormFamily::Euclidean:
      return x.norm();
    case NormFamily::Quadratic:
      return std::sqrt(x.dot(A_ * x));
    case NormFamily::QuarticPerturbed: {
      const double r2 = x.squaredNorm();
      const double p = x.array().pow(4).sum();
      return std::sqrt(r2 + delta_ * p / r2);
    }
  }
  throw InvalidModel("unreachable norm family");
}

Vec NormModel::gradient(const Vec& x) const {
  check_argument(x);
  switch (family_) {
    case NormFamily::Euclidean:
      return x / x.norm();
    case NormFamily::Quadratic:
      return (A_ * x) / value(x);
    case NormFamily::QuarticPerturbed: {
      const double r2 = x.squaredNorm();
      const double p = x.array().pow(4).sum();
      // d(F^2/2) = x + delta (2 x^3 / r^2 - x p / r^4)
      Vec g = x;
      for (int a = 0; a < dim_; ++a)
        g[a] += delta_ * (2.0 * x[a] * x[a] * x[a] / r2 - x[a] * p / (r2 * r2));
      return g / value(x);
    }
  }
  throw InvalidModel("unreachable norm family");
}

Mat NormModel::metric(const Vec& x) const {
  check_argument(x);
  switch (family_) {
    case NormFamily::Euclidean:
      return Mat::Identity(dim_, dim_);
    case NormFamily::Quadratic:
      return A_;
    case NormFamily::QuarticPerturbed: {
      const double r2 = x.squaredNorm();
      const double r4 = r2 * r2;
      const double r6 = r4 * r2;
      const double p = x.array().pow(4).sum();
      Mat g = Mat::Identity(dim_, dim_);
      for (int a = 0; a < dim_; ++a) {
        for (int b = a; b < dim_; ++b) {
          double t = -4.0 * (x[a] * x[a] * x[a] * x[b] + x[a] * x[b] * x[b] * x[b]) / r4 +
                     4.0 * x[a] * x[b] * p / r6;
          if (a == b) t += 6.0 * x[a] * x[a] / r2 - p / r4;
          g(a, b) += delta_ * t;
          g(b, a) = g(a, b);
        }
      }
      return g;
    }
  }
  throw InvalidModel("unreachable norm family");
}

Tensor3 NormModel::cubic(const Vec& x) const {
  check_argument(x);
  Tensor3 q(dim_);
  if (family_ != NormFamily::QuarticPerturbed) return q;  // quadratic level sets: exact zero
  const double r2 = x.squaredNorm();
  const double r4 = r2 * r2;
  const double r6 = r4 * r2;
  const double r8 = r4 * r4;
  const double p = x.array().pow(4).sum();
  // Fill the sorted-index representative once; mirror to all slot orders.
  for (int a = 0; a < dim_; ++a) {
    for (int b = a; b < dim_; ++b) {
      for (int c = b; c < dim_; ++c) {
        double t = 16.0 * x[a] * x[b] * x[c] * (x[a] * x[a] + x[b] * x[b] + x[c] * x[c]) / r6 -
                   24.0 * x[a] * x[b] * x[c] * p / r8;
        if (a == b && b == c) t += 12.0 * x[a] / r2;
        if (a == b) t += -12.0 * x[a] * x[a] * x[c] / r4 - 4.0 * x[c] * x[c] * x[c] / r4 +
                         4.0 * p * x[c] / r6;
        if (a == c) t += -12.0 * x[a] * x[a] * x[b] / r4 - 4.0 * x[b] * x[b] * x[b] / r4 +
                         4.0 * p * x[b] / r6;
        if (b == c) t += -12.0 * x[b] * x[b] * x[a] / r4 - 4.0 * x[a] * x[a] * x[a] / r4 +
                         4.0 * p * x[a] / r6;
        const double v = delta_ * t;
        q(a, b, c) = v;
        q(a, c, b) = v;
        q(b, a, c) = v;
        q(b, c, a) = v;
        q(c, a, b) = v;
        q(c, b, a) = v;
      }
    }
  }
  return q;
}

NormJet NormModel::eval(const Vec& x) const {
  NormJet jet;
  jet.F = value(x);
  jet.DF = gradient(x);
  jet.G = metric(x);
  jet.Q = cubic(x);
  return jet;
}

DualResult NormModel::dual(const Vec& xi) const {
  check_argument(xi);
  const double scale = xi.norm();
  const Vec w = xi / scale;

  const auto residual = [&](const Vec& x, double mu, Vec* out_res) -> double {
    if (!(mu > 0.0) || !x.allFinite() || x.squaredNorm() == 0.0)
      return std::numeric_limits<double>::infinity();
    Vec res(dim_ + 1);
    res.head(dim_) = gradient(x) - w / mu;
    res[dim_] = value(x) - 1.0;
    if (out_res) *out_res = res;
    return res.lpNorm<Eigen::Infinity>();
  };

  // Stationarity of <x,w> on {F=1}: DF(x) = w / mu, F(x) = 1, with
  // mu the attained support value.
  const double fw = value(w);
  Vec x = w / fw;
  double mu = fw;

  DualResult out;
  for (int it = 0; it <= kDualMaxIter; ++it) {
    Vec res;
    const double rnorm = residual(x, mu, &res);
    if (rnorm <= kDualTol) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    if (it == kDualMaxIter) break;

    const double f = value(x);
    const Vec df = gradient(x);
    const Mat g = metric(x);
    Mat jac = Mat::Zero(dim_ + 1, dim_ + 1);
    jac.topLeftCorner(dim_, dim_) = (g - df * df.transpose()) / f;
    jac.topRightCorner(dim_, 1) = w / (mu * mu);
    jac.bottomLeftCorner(1, dim_) = df.transpose();
    Vec step = jac.partialPivLu().solve(-res);
    if (!step.allFinite()) break;

    // Backtrack until the residual drops; full steps can throw mu across
    // zero far from the solution.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 24; ++bt) {
      const Vec xt = x + alpha * step.head(dim_);
      const double mut = mu + alpha * step[dim_];
      if (residual(xt, mut, nullptr) < rnorm) {
        x = xt;
        mu = mut;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (!out.converged)
    throw NoConvergence("dual norm Newton did not reach tolerance within the iteration cap");
  out.value = mu * scale;
  out.point = x;
  return out;
}

NormCheckReport NormModel::verify(int samples, std::uint64_t seed) const {
  NormCheckReport rep;
  rep.samples = samples;
  rep.min_eig_metric = std::numeric_limits<double>::infinity();
  SampleStream rng(seed);
  for (int s = 0; s < samples; ++s) {
    // Random magnitudes keep the homogeneous scaling honest.
    const double lam = 0.25 + 4.0 * rng.uniform();
    const Vec x = lam * rng.direction(dim_);
    const NormJet jet = eval(x);

    rep.gradient_identity =
        std::max(rep.gradient_identity, std::abs(jet.DF.dot(x) - jet.F) / jet.F);
    const Mat hess_f = (jet.G - jet.DF * jet.DF.transpose()) / jet.F;
    rep.hessian_radial =
        std::max(rep.hessian_radial, (hess_f * x).lpNorm<Eigen::Infinity>() / jet.F);

    Eigen::SelfAdjointEigenSolver<Mat> es(jet.G, Eigen::EigenvaluesOnly);
    rep.min_eig_metric = std::min(rep.min_eig_metric, es.eigenvalues().minCoeff());

    Vec xu = x / jet.F;
    rep.radial_third_order =
        std::max(rep.radial_third_order, cubic(xu).contract(xu).cwiseAbs().maxCoeff());

    rep.unit_level_dual = std::max(rep.unit_level_dual, std::abs(dual(jet.DF).value - 1.0));

    const Vec xi = (0.25 + 4.0 * rng.uniform()) * rng.direction(dim_);
    const DualResult d = dual(xi);
    rep.unit_level_primal = std::max(rep.unit_level_primal, std::abs(value(d.point) - 1.0));
    rep.inversion = std::max(
        rep.inversion, (d.value * gradient(d.point) - xi).lpNorm<Eigen::Infinity>() / xi.norm());
  }
  return rep;
}

}  // namespace amink
