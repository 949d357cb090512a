#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "amink/errors.hpp"

namespace amink {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense symmetric rank-3 tensor of small dimension.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), a_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }

  double& operator()(int i, int j, int k) { return a_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return a_[idx(i, j, k)]; }

  // M_jk = sum_i T_ijk u_i
  Mat contract(const Vec& u) const;
  double contract(const Vec& u, const Vec& v, const Vec& w) const;
  double max_abs() const;

 private:
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * d_ + j) * d_ + k;
  }
  int d_ = 0;
  std::vector<double> a_;
};

enum class NormFamily { Euclidean, Quadratic, QuarticPerturbed };

// Value and derivatives of one norm evaluation. G and Q are the second and
// third derivatives of F^2/2, so G is the metric candidate and Q vanishes
// exactly when the norm is quadratic.
struct NormJet {
  double F = 0.0;
  Vec DF;
  Mat G;
  Tensor3 Q;
};

struct DualResult {
  double value = 0.0;  // dual norm of the query covector
  Vec point;           // support point on the unit level set, = gradient of the dual norm
  int iterations = 0;
  bool converged = false;
};

// Residual summary of the smooth-norm contract over random directions.
// All residuals are relative where a natural scale exists.
struct NormCheckReport {
  int samples = 0;
  double gradient_identity = 0.0;   // max |<DF(x),x> - F| / F
  double hessian_radial = 0.0;      // max |Hess(F)(x) x| / F
  double unit_level_primal = 0.0;   // max |F(dual point) - 1|
  double unit_level_dual = 0.0;     // max |dual norm of DF(x) - 1|
  double inversion = 0.0;           // max |F0(xi) DF(dual point) - xi| / |xi|
  double min_eig_metric = 0.0;      // min over samples of lambda_min(G)
  double radial_third_order = 0.0;  // max |Q(x)(x,.,.)|
};

// A Minkowski norm: positively 1-homogeneous, smooth away from the origin,
// with positive definite Hessian of F^2/2. Instances are immutable.
class NormModel {
 public:
  static NormModel euclidean(int dim);
  static NormModel quadratic(Mat A);
  // F^2 = |x|^2 + delta * sum_i x_i^4 / |x|^2. Admissibility of delta is
  // checked at construction by a dense eigenvalue scan of G.
  static NormModel quartic(int dim, double delta);

  int dimension() const { return dim_; }
  NormFamily family() const { return family_; }
  double delta() const { return delta_; }
  const Mat& matrix() const { return A_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat metric(const Vec& x) const;
  Tensor3 cubic(const Vec& x) const;

  NormJet eval(const Vec& x) const;

  // Dual norm and its gradient by Newton on the support stationarity system.
  DualResult dual(const Vec& xi) const;

  NormCheckReport verify(int samples, std::uint64_t seed) const;

 private:
  NormModel(NormFamily f, int dim, Mat A, double delta)
      : family_(f), dim_(dim), A_(std::move(A)), delta_(delta) {}

  void check_argument(const Vec& x) const;

  NormFamily family_ = NormFamily::Euclidean;
  int dim_ = 0;
  Mat A_;          // quadratic family only
  Mat A_inv_;      // cached inverse for the quadratic family
  double delta_ = 0.0;
};

}  // namespace amink
