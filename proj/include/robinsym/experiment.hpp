#pragma once

// Experiment runner: a JSON configuration names a domain, a model space, a
// source, Robin parameters and a list of checks. run_experiment builds the
// mesh, solves, symmetrizes from the discrete data and writes reports.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robinsym/mesh.hpp"
#include "robinsym/model_geometry.hpp"
#include "robinsym/verify.hpp"

namespace robinsym {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

struct CheckSpec {
  std::string id;
  double p = std::numeric_limits<double>::quiet_NaN();
  int q = 1;
  ProfileClaim claim = ProfileClaim::A;
  int thresholds = 0;  // lemma3.1 and bossel-functional
  std::optional<double> t;  // lemma3.2; unset means max u
  double max_volume = 0.0;  // profile-monotonicity; 0 picks the default
  int samples = 0;  // measure-bound and profile checks
};

struct SourceConfig {
  enum class Kind { torsion, expr, field } kind = Kind::torsion;
  std::string expr;
  std::filesystem::path field;
};

struct ExperimentConfig {
  ModelSpace space{0, 2, 1.0};
  MetricModel metric = MetricModel::flat();
  std::optional<DomainSpec> domain;
  std::optional<std::filesystem::path> mesh_file;
  SourceConfig source;
  std::vector<double> beta{1.0};
  std::vector<CheckSpec> checks;
  double h = 0.05;
  int refine_levels = 0;
  std::filesystem::path output_dir = "robinsym_out";

  /// Validates everything that can be checked without a mesh; throws ConfigError.
  /// Relative file paths resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Every field, defaults included.
  nlohmann::ordered_json to_json() const;

  bool needs_mesh() const;
};

DomainSpec domain_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json domain_to_json(const DomainSpec& d);
MetricModel metric_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json metric_to_json(const MetricModel& m);
/// The model space a metric compares against: flat (0, 2, 1), sphere (1, 2, 1), warped (0, 2, AVR).
ModelSpace space_for_metric(const MetricModel& m);

struct CheckInfo {
  std::string id;
  std::string statement;
  std::string parameters;
  std::string ranges;
  bool needs_mesh;
};

const std::vector<CheckInfo>& check_catalog();
std::string list_checks_text();
nlohmann::ordered_json list_checks_json();

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  int jobs = 1;
  bool write_files = true;
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = kExitPass;
  std::string diagnostic;
  std::vector<ComparisonReport> reports;  // sorted by (level, beta, check, index)
};

/// Never throws for configuration or solver problems; they map to exit codes.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace robinsym
