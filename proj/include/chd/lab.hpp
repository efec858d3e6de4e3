#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chd/evolve.hpp"
#include "chd/multipliers.hpp"
#include "chd/profiles.hpp"

namespace chd {

// phi1-oracle, spectral-scan, wave-identities, green-audit, multiplier-audit,
// linear-damping, cross-oracle, nonlinear-demo
const std::vector<std::string>& scenario_names();

struct LinearSetup {
  int k = 1;
  double dt = 0.05;
  double data_lo = 0.1, data_hi = 0.9;  // Gevrey bump support of the initial good unknown
  Vec check_times{1, 5, 10};            // cross-oracle snapshots
  double t_max = 200, sample_dt = 1;
  double fit_lo = 20, fit_hi = 200;
};

struct NonlinearSetup {
  NonlinearConfig solver;
  double eps = 1e-3, T = 50;
  int k_lo = 2;       // data in x modes k_lo, k_lo + 1
  double fit_lo = 0;  // scattering fit over [fit_lo, T]; 0 means T/10
};

struct LabConfig {
  std::string scenario;
  ProfileSpec profile;  // scenario default unless given
  std::vector<int> ks;  // scenario default when empty
  int kmax = 8;         // spectral-scan range |k| <= kmax
  uint64_t seed = 1;
  std::string out = "lab_out";
  LinearSetup linear;
  NonlinearSetup nonlinear;
  MultiplierParams multipliers;
  int audit_samples = 10000;
};

// Scenario defaults (profile, wavenumbers) filled in.  UnknownScenario as RangeError.
LabConfig default_config(const std::string& scenario);
// ParseError, UnknownKey (the key path in the message), RangeError
LabConfig parse_config_text(const std::string& text);
LabConfig parse_config(const std::string& path);  // also IOError
// Ranges, and the profile hypotheses (raised as RangeError).
void validate_config(const LabConfig& c);
nlohmann::json config_to_json(const LabConfig& c);

struct Check {
  int criterion = 0;
  std::string name;
  bool pass = false;
  double value = 0, bound = 0;
  std::string detail;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<Vec> rows;
};

// Anything written by a module writer (binary dumps, module CSVs).
struct Artifact {
  std::string name;
  std::function<void(const std::string&)> write;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<Check> checks;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<Table> tables;
  std::vector<Artifact> files;
  bool pass() const;
  // all checks of one acceptance criterion; false if the scenario has none
  bool criterion_pass(int criterion) const;
};

ScenarioResult run_scenario(const LabConfig& c);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  uint64_t bytes = 0;
};

// summary.json, one CSV per table, the artifacts, then manifest.json over all
// of them.  No timings or timestamps, so reruns hash identically.  IOError.
std::vector<ManifestEntry> emit_outputs(const ScenarioResult& r, const nlohmann::json& config, const std::string& dir);
nlohmann::json summary_json(const ScenarioResult& r, const nlohmann::json& config);
void write_table_csv(const std::string& path, const Table& t);
std::string sha256_file(const std::string& path);

}  // namespace chd
