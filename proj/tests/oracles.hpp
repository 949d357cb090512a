#pragma once

// Independent numerical references used by the tests only: finite-difference
// derivative chains, closed-form duals, and dense support sampling. Nothing
// here is allowed on any production code path.

#include <cmath>

#include "amink/norm.hpp"

namespace oracle {

using amink::Mat;
using amink::NormModel;
using amink::Tensor3;
using amink::Vec;

inline double fd_step(const Vec& x) { return 1e-5 * std::max(1.0, x.norm()); }

// Gradient of F^2/2 from norm values alone.
inline Vec fd_gradient(const NormModel& m, const Vec& x) {
  const double h = fd_step(x);
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = m.value(xp), fm = m.value(xm);
    g[i] = (fp * fp - fm * fm) / (4.0 * h);
  }
  return g;
}

// Hessian of F^2/2 by differencing the analytic gradient of F.
inline Mat fd_metric(const NormModel& m, const Vec& x) {
  const double h = fd_step(x);
  Mat g(x.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vec gp = m.value(xp) * m.gradient(xp);
    const Vec gm = m.value(xm) * m.gradient(xm);
    g.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (g + g.transpose());
}

// Third derivative of F^2/2 by differencing the analytic metric.
inline Tensor3 fd_cubic(const NormModel& m, const Vec& x) {
  const double h = fd_step(x);
  Tensor3 q(static_cast<int>(x.size()));
  for (int c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const Mat d = (m.metric(xp) - m.metric(xm)) / (2.0 * h);
    for (int a = 0; a < x.size(); ++a)
      for (int b = 0; b < x.size(); ++b) q(a, b, c) = d(a, b);
  }
  return q;
}

inline double quadratic_dual_value(const Mat& A, const Vec& xi) {
  const Vec y = A.ldlt().solve(xi);
  return std::sqrt(xi.dot(y));
}

inline Vec quadratic_dual_point(const Mat& A, const Vec& xi) {
  const Vec y = A.ldlt().solve(xi);
  return y / quadratic_dual_value(A, xi);
}

// Dense maximization of <x, xi> over the unit level set; plane models only.
inline double dual_by_sampling(const NormModel& m, const Vec& xi, int samples) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double t = 2.0 * M_PI * k / samples;
    Vec d(2);
    d << std::cos(t), std::sin(t);
    best = std::max(best, d.dot(xi) / m.value(d));
  }
  return best;
}

}  // namespace oracle
