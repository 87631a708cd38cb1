#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bsweyl/io.hpp"

namespace bsweyl {

/// Every validation problem found in a config, reported together.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

const std::vector<std::string>& experiment_names();

/// Defaults for one experiment, including the output directory (env BSWEYL_OUTPUT_DIR or ./bsweyl-out).
io::json default_config(const std::string& experiment);

/// Overlays `user` on the experiment defaults. Rejects unknown fields and ill-typed values,
/// listing every violation. `user` must carry "experiment".
io::json resolve_config(const io::json& user);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct RunResult {
  bool pass = false;
  std::vector<CheckResult> checks;
  io::json report;
  std::vector<std::filesystem::path> artifacts;
  std::filesystem::path directory;
};

/// Runs a resolved config, writes artifacts plus manifest.json and report.json into the output directory.
RunResult run_experiment(const io::json& resolved);

/// Config stored in a manifest written by run_experiment.
io::json config_from_manifest(const io::json& manifest);

}  // namespace bsweyl
