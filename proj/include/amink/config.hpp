#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amink/norm.hpp"
#include "amink/solver.hpp"

namespace amink {

// Key/value pairs in file order. Order is preserved so that diagnostics are
// stable and duplicate keys can be named.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  std::string norm_family;
  Mat norm_matrix;
  double norm_delta = 0.0;

  int mesh_dimension = 1;
  int mesh_resolution = 0;  // 0 selects the per-dimension default

  std::string curvature_source = "constant";
  double curvature_constant = 1.0;
  std::string curvature_file;
  std::string curvature_body;
  std::vector<double> curvature_axes;

  SolveOptions solver;

  std::string output_dir = "out";
  std::vector<std::string> output_formats;  // subset of obj, csv, json
};

// Reads a flat "key = value" file. '#' starts a comment; blank lines are
// skipped. IoError if the file cannot be read, ConfigError on a malformed
// line.
KeyValues read_key_values(const std::string& path);
KeyValues parse_key_values(const std::string& text, const std::string& origin);

// Validates the full map and applies documented defaults. Every violation is
// collected; the ConfigError message lists all of them in a stable order.
RunConfig validate_config(const KeyValues& kv);

NormModel make_model(const RunConfig& cfg);

// Effective resolution after defaults.
int effective_resolution(const RunConfig& cfg);

}  // namespace amink
