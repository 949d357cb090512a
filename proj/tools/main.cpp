#include <CLI11.hpp>
#include <iostream>

#include "amink/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"prescribed-curvature solver for anisotropic convex bodies"};
  std::string config_path;
  bool verify_only = false;
  int resolution_override = 0;
  app.add_option("--config", config_path, "path to a key = value run configuration")->required();
  app.add_flag("--verify-norm", verify_only,
               "run the norm-contract and mesh-geometry checks, skip the solve");
  app.add_option("--resolution-override", resolution_override,
                 "replace mesh.resolution from the config");
  CLI11_PARSE(app, argc, argv);

  amink::RunConfig cfg;
  try {
    amink::KeyValues kv = amink::read_key_values(config_path);
    if (resolution_override > 0) {
      bool replaced = false;
      for (auto& [k, v] : kv) {
        if (k == "mesh.resolution") {
          v = std::to_string(resolution_override);
          replaced = true;
        }
      }
      if (!replaced) kv.emplace_back("mesh.resolution", std::to_string(resolution_override));
    }
    cfg = amink::validate_config(kv);
  } catch (const amink::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amink::kExitIo;
  } catch (const amink::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amink::kExitConfig;
  }

  if (verify_only) return amink::run_verify(cfg, std::cout);

  const amink::RunResult result = amink::run_solve(cfg);
  if (result.exit_code != amink::kExitOk) std::cerr << "error: " << result.error << "\n";
  return result.exit_code;
}
