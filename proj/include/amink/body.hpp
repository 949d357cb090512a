#pragma once

#include "amink/solver.hpp"

namespace amink {

// Reconstructed convex hypersurface. Connectivity is shared with the source
// mesh; provenance records which support field produced it.
struct BodyMesh {
  std::uint64_t source_mesh_id = 0;
  std::uint64_t provenance = 0;  // hash of the generating support values
  int dim = 0;
  std::vector<Vec> X;              // surface points
  std::vector<Vec> aniso_normal;   // unit-norm normal (the source node position)
  std::vector<Vec> euclid_normal;  // unit Euclidean normal
  Vec recomputed_K;                // NaN until body_curvature runs
  std::vector<std::array<int, 3>> triangles;
};

struct BodyMeasures {
  double volume = 0.0;
  double aniso_area = 0.0;
  double r_inner = 0.0;   // largest inscribed scaled copy of the unit body
  double R_outer = 0.0;   // smallest circumscribed scaled copy
  Vec center_inner;
  Vec center_outer;
};

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct InequalityReport {
  InequalityCheck minkowski_identity;
  InequalityCheck isoperimetric;
  InequalityCheck andrews_inner_radius;
  InequalityCheck c0_sandwich;
};

BodyMesh reconstruct(const WulffMesh& mesh, const ScalarField& S);

// Independent curvature recovery from the reconstructed positions; fills
// body.recomputed_K and reports the worst relative deviation from K.
ScalarField body_curvature(BodyMesh& body, const WulffMesh& mesh, const NormModel& model,
                           const ScalarField& K, double* roundtrip_error);

BodyMeasures body_measures(const BodyMesh& body, const WulffMesh& mesh,
                           const ScalarField& S);

InequalityReport inequality_report(const WulffMesh& mesh, const ScalarField& S,
                                   const ScalarField& K, const BodyMesh& body);

}  // namespace amink
