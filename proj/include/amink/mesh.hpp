#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "amink/norm.hpp"

namespace amink {

// Nodal scalar samples bound to one mesh instance. Operations refuse fields
// carrying a foreign mesh id; nothing is ever resampled implicitly.
struct ScalarField {
  std::uint64_t mesh_id = 0;
  Vec values;
};

struct FieldDerivatives {
  std::vector<Vec> grad;  // chart components of the covariant gradient
  std::vector<Mat> hess;  // covariant Hessian, symmetric n x n per node
};

struct GeometryReport {
  bool gauss_checked = false;
  double gauss = 0.0;  // curvature vs metric/cubic closed form, surfaces only
  double measure_density = 0.0;
  double radial_cubic = 0.0;  // max |Q(z)(z,.,.)| over nodes
  bool cubic_gradient_checked = false;
  double cubic_gradient_symmetry = 0.0;  // covariant-derivative slot symmetry of Q
};

// Per-node differentiation stencil in the node's own chart. cols lists the
// participating nodes (the node itself first), local holds their chart
// coordinates (m x n), w1 the first-partial weights (n x m) and w2 the
// second-partial weights ((n(n+1)/2) x m, row order 11[,12,22]).
struct Stencil {
  std::vector<int> cols;
  Mat local;
  Mat w1;
  Mat w2;
};

// Discretized unit level set of a Minkowski norm, with the induced metric,
// cubic tensor, measure weights, and differentiation stencils baked in.
// Instances are immutable after construction.
class WulffMesh {
 public:
  std::uint64_t id() const { return id_; }
  int dim() const { return n_; }          // hypersurface dimension, 1 or 2
  int ambient() const { return n_ + 1; }
  int resolution() const { return resolution_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return z.size(); }

  ScalarField field(Vec values) const;
  ScalarField constant_field(double c) const;
  // Component alpha of the position pairing with the coordinate axes; these
  // span the kernel of the linearized problem.
  ScalarField kernel_field(int alpha) const;

  void dump_nodes(std::ostream& os) const;

  // Node data (index-aligned vectors).
  std::vector<Vec> z;            // position on the unit level set
  std::vector<Vec> nu;           // parameter sphere point
  std::vector<Mat> tangent;      // ambient x n, columns are chart tangents
  std::vector<Mat> g;            // chart metric
  std::vector<Mat> g_inv;
  std::vector<Tensor3> Q_chart;  // cubic tensor in chart components
  std::vector<Tensor3> gamma;    // Christoffel symbols, (k,i,j) layout
  Vec mu_weight;
  Vec density;                   // measure density against the parameter element
  Vec dual_value;                // dual norm of the parameter direction
  std::vector<Vec> ambient_DF;   // norm gradient at z; kernel fields are its components
  std::vector<Mat> ambient_G;
  std::vector<Mat> ambient_G_inv;
  std::vector<Tensor3> ambient_Q;

  std::vector<Stencil> stencil;
  std::vector<std::array<int, 3>> triangles;  // surfaces only

 private:
  friend WulffMesh build_mesh(const NormModel& model, int n, int resolution);
  WulffMesh() = default;

  std::uint64_t id_ = 0;
  int n_ = 0;
  int resolution_ = 0;
  double spacing_ = 0.0;
};

WulffMesh build_mesh(const NormModel& model, int n, int resolution);

FieldDerivatives differentiate(const WulffMesh& mesh, const ScalarField& f);
double integrate_mu(const WulffMesh& mesh, const ScalarField& f);
// Moments of f against the kernel fields; all components must vanish for a
// prescribed curvature to be solvable.
Vec closure_residual(const WulffMesh& mesh, const ScalarField& f);
GeometryReport geometry_selfcheck(const WulffMesh& mesh);

}  // namespace amink
