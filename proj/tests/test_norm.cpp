#include <doctest.h>

#include <cmath>

#include "amink/norm.hpp"
#include "oracles.hpp"

using namespace amink;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST_CASE("euclidean jet has closed-form derivatives") {
  const NormModel m = NormModel::euclidean(2);
  const NormJet j = m.eval(v2(3.0, 4.0));
  CHECK(j.F == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(j.DF[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(j.DF[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK((j.G - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(j.Q.max_abs() == 0.0);
}

TEST_CASE("quadratic jet matches its defining matrix") {
  Mat A(2, 2);
  A << 4.0, 0.0, 0.0, 1.0;
  const NormModel m = NormModel::quadratic(A);
  const NormJet j = m.eval(v2(1.0, 0.0));
  CHECK(j.F == doctest::Approx(2.0).epsilon(1e-14));
  CHECK((j.G - A).cwiseAbs().maxCoeff() == 0.0);
  CHECK(j.Q.max_abs() == 0.0);
}

TEST_CASE("quartic derivatives agree with the finite-difference chain") {
  const NormModel m = NormModel::quartic(2, 0.2);

  SUBCASE("axis point, frozen reference") {
    const Vec x = v2(1.0, 0.0);
    const Mat G = m.metric(x);
    // Reference computed by the difference chain below and checked once by
    // hand: the axis metric is diag(1.2, 0.8) and the cubic tensor vanishes.
    CHECK(G(0, 0) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(G(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(std::abs(G(0, 1)) < 1e-14);
    CHECK(m.cubic(x).max_abs() < 1e-12);
    CHECK((G - oracle::fd_metric(m, x)).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("generic plane point") {
    const Vec x = v2(0.8, -0.55);
    CHECK(rel(m.value(x) * m.value(x) / 2.0,
              0.5 * (x.squaredNorm() + 0.2 * x.array().pow(4).sum() / x.squaredNorm())) < 1e-14);
    CHECK((m.value(x) * m.gradient(x) - oracle::fd_gradient(m, x)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((m.metric(x) - oracle::fd_metric(m, x)).cwiseAbs().maxCoeff() < 1e-6);
    const Tensor3 q = m.cubic(x);
    const Tensor3 qfd = oracle::fd_cubic(m, x);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(q(a, b, c) - qfd(a, b, c)));
    CHECK(worst < 1e-6);
  }

  SUBCASE("generic space point") {
    const NormModel m3 = NormModel::quartic(3, 0.2);
    const Vec x = v3(0.9, -0.35, 0.6);
    CHECK((m3.metric(x) - oracle::fd_metric(m3, x)).cwiseAbs().maxCoeff() < 1e-6);
    const Tensor3 q = m3.cubic(x);
    const Tensor3 qfd = oracle::fd_cubic(m3, x);
    double worst = 0.0, asym = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          worst = std::max(worst, std::abs(q(a, b, c) - qfd(a, b, c)));
          asym = std::max({asym, std::abs(q(a, b, c) - q(b, a, c)),
                           std::abs(q(a, b, c) - q(a, c, b)), std::abs(q(a, b, c) - q(c, b, a))});
        }
    CHECK(worst < 1e-6);
    CHECK(asym == 0.0);  // analytic slot symmetry is exact
  }
}

TEST_CASE("homogeneous scaling of the jet") {
  Mat A(2, 2);
  A << 2.0, 1.0, 1.0, 2.0;
  const NormModel models[] = {NormModel::euclidean(2), NormModel::quadratic(A),
                              NormModel::quartic(2, 0.2)};
  const Vec x = v2(0.62, -1.3);
  for (const NormModel& m : models) {
    for (double lam : {0.5, 2.0, 10.0}) {
      CHECK(rel(m.value(lam * x), lam * m.value(x)) < 1e-10);
      CHECK((m.gradient(lam * x) - m.gradient(x)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((m.metric(lam * x) - m.metric(x)).cwiseAbs().maxCoeff() < 1e-10);
      double qdiff = 0.0;
      const Tensor3 qs = m.cubic(lam * x), q = m.cubic(x);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            qdiff = std::max(qdiff, std::abs(lam * qs(a, b, c) - q(a, b, c)));
      CHECK(qdiff < 1e-10);
    }
  }
}

TEST_CASE("dual of the euclidean norm is itself") {
  const NormModel m = NormModel::euclidean(2);
  const DualResult d = m.dual(v2(0.0, 3.0));
  CHECK(d.converged);
  CHECK(d.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(d.point[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.point[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic dual matches the closed form") {
  Mat A(2, 2);
  A << 4.0, 0.0, 0.0, 1.0;
  const NormModel m = NormModel::quadratic(A);

  const DualResult d = m.dual(v2(1.0, 0.0));
  CHECK(d.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.point[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(d.point[1]) < 1e-10);

  Mat B(2, 2);
  B << 2.0, 1.0, 1.0, 2.0;
  const NormModel mb = NormModel::quadratic(B);
  const Vec xi = v2(0.3, -1.7);
  const DualResult db = mb.dual(xi);
  CHECK(rel(db.value, oracle::quadratic_dual_value(B, xi)) < 1e-10);
  CHECK((db.point - oracle::quadratic_dual_point(B, xi)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("quartic dual agrees with dense support sampling") {
  const NormModel m = NormModel::quartic(2, 0.2);
  for (const Vec& xi : {v2(1.0, 0.0), v2(0.3, 0.9), v2(-1.1, 0.4)}) {
    const DualResult d = m.dual(xi);
    CHECK(d.converged);
    CHECK(d.iterations <= 50);
    CHECK(std::abs(d.value - oracle::dual_by_sampling(m, xi, 1000000)) < 1e-4);
    // support point sits on the unit level set and inverts the gradient map
    CHECK(std::abs(m.value(d.point) - 1.0) < 1e-10);
    CHECK((d.value * m.gradient(d.point) - xi).cwiseAbs().maxCoeff() < 1e-9 * xi.norm());
  }
}

TEST_CASE("dual scaling and involution") {
  Mat A(2, 2);
  A << 2.0, 1.0, 1.0, 2.0;
  const NormModel models[] = {NormModel::euclidean(2), NormModel::quadratic(A),
                              NormModel::quartic(2, 0.2)};
  for (const NormModel& m : models) {
    const Vec xi = v2(0.8, 0.45);
    const DualResult d1 = m.dual(xi);
    const DualResult d2 = m.dual(2.0 * xi);
    CHECK(rel(d2.value, 2.0 * d1.value) < 1e-10);
    CHECK((d2.point - d1.point).cwiseAbs().maxCoeff() < 1e-9);

    // Dualizing the numeric dual recovers the primal norm: the support
    // sweep over dual directions reproduces F from below.
    std::vector<double> dual_values(10000);
    std::vector<Vec> dirs(10000);
    for (int k = 0; k < 10000; ++k) {
      const double t = 2.0 * M_PI * k / 10000;
      dirs[k] = v2(std::cos(t), std::sin(t));
      dual_values[k] = m.dual(dirs[k]).value;
    }
    std::uint64_t s = 7;
    for (int trial = 0; trial < 500; ++trial) {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      const double ang = 2.0 * M_PI * static_cast<double>(s >> 11) * 0x1.0p-53;
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      const double mag = 0.2 + 3.0 * static_cast<double>(s >> 11) * 0x1.0p-53;
      const Vec x = mag * v2(std::cos(ang), std::sin(ang));
      double sup = -1e300;
      for (int k = 0; k < 10000; ++k) sup = std::max(sup, x.dot(dirs[k]) / dual_values[k]);
      CHECK(sup <= m.value(x) + 1e-6);
      CHECK(sup >= m.value(x) - 1e-3);
    }
  }
}

TEST_CASE("norm contract report stays tight for analytic families") {
  const NormCheckReport re = NormModel::euclidean(3).verify(1000, 11);
  CHECK(re.gradient_identity < 1e-12);
  CHECK(re.hessian_radial < 1e-12);
  CHECK(re.unit_level_primal < 1e-10);
  CHECK(re.unit_level_dual < 1e-10);
  CHECK(re.inversion < 1e-10);
  CHECK(re.min_eig_metric == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(re.radial_third_order == 0.0);

  Mat A(2, 2);
  A << 2.0, 1.0, 1.0, 2.0;
  const NormCheckReport rq = NormModel::quadratic(A).verify(1000, 12);
  CHECK(rq.gradient_identity < 1e-10);
  CHECK(rq.hessian_radial < 1e-10);
  CHECK(rq.unit_level_primal < 1e-10);
  CHECK(rq.unit_level_dual < 1e-10);
  CHECK(rq.inversion < 1e-10);
  // spectrum of [[2,1],[1,2]] is {1,3}
  CHECK(rq.min_eig_metric == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rq.radial_third_order == 0.0);

  const NormCheckReport rp = NormModel::quartic(2, 0.2).verify(1000, 13);
  CHECK(rp.gradient_identity < 1e-8);
  CHECK(rp.hessian_radial < 1e-8);
  CHECK(rp.unit_level_primal < 1e-8);
  CHECK(rp.unit_level_dual < 1e-8);
  CHECK(rp.inversion < 1e-8);
  CHECK(rp.min_eig_metric > 0.0);
  CHECK(rp.radial_third_order < 1e-12);
}

TEST_CASE("model construction rejects bad parameters") {
  CHECK_THROWS_AS(NormModel::euclidean(2).value(Vec::Zero(2)), ZeroVector);
  CHECK_THROWS_AS(NormModel::euclidean(1), InvalidModel);

  Mat bad(2, 2);
  bad << 1.0, 3.0, 3.0, 1.0;  // eigenvalues {4, -2}
  CHECK_THROWS_AS(NormModel::quadratic(bad), InvalidModel);

  try {
    NormModel::quartic(2, 10.0);
    FAIL("quartic delta=10 must be rejected");
  } catch (const InvalidModel& e) {
    const std::string msg = e.what();
    CHECK(msg.find("eigenvalue") != std::string::npos);
    CHECK(msg.find("-") != std::string::npos);  // the offending value is negative
  }

  const NormModel m = NormModel::euclidean(3);
  CHECK_THROWS_AS(m.value(Vec::Ones(2)), InvalidModel);
}
