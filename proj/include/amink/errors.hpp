#pragma once

#include <stdexcept>
#include <string>

namespace amink {

// Base for every failure the library reports. Catch this to map failures
// to process exit codes without enumerating the concrete types.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- norm layer ---

class ZeroVector : public Error {
public:
  ZeroVector() : Error("norm evaluated at the zero vector") {}
};

// Model parameters violate the admissibility contract (non-SPD matrix,
// perturbation strength outside the convexity window, bad dimension).
class InvalidModel : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

// --- mesh layer ---

class MeshBuildFailure : public Error {
public:
  using Error::Error;
};

// A field was combined with a mesh it was not sampled on. Fields are
// never resampled implicitly.
class MeshMismatch : public Error {
public:
  MeshMismatch() : Error("scalar field does not belong to this mesh") {}
};

class NonPositiveField : public Error {
public:
  using Error::Error;
};

// --- solver layer ---

class Inadmissible : public Error {
public:
  using Error::Error;
};

class NonPositiveK : public Error {
public:
  using Error::Error;
};

class SingularGram : public Error {
public:
  SingularGram() : Error("kernel Gram matrix is numerically singular") {}
};

class AdmissibilityLost : public Error {
public:
  using Error::Error;
};

class MaxIterations : public Error {
public:
  using Error::Error;
};

class LinearSolveFailure : public Error {
public:
  using Error::Error;
};

// Prescribed curvature fails the integral compatibility gate; the solve
// is refused before any Newton step.
class ClosureViolated : public Error {
public:
  using Error::Error;
};

class ContinuationStalled : public Error {
public:
  using Error::Error;
};

// --- body layer ---

class DegenerateBody : public Error {
public:
  using Error::Error;
};

// --- cli layer ---

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace amink
