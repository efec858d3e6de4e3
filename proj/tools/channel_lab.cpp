// channel_lab: runs one laboratory scenario from a JSON config and writes
// summary.json, CSV series, binary snapshots and a SHA-256 manifest.
//
// exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 internal or I/O error
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "chd/lab.hpp"

using namespace chd;

namespace {

void report_error(const char* stage, const Error& e, const std::string& out_dir) {
  nlohmann::json j{{"error", {{"kind", e.kind()}, {"message", e.what()}, {"stage", stage}}}};
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::ofstream f(out_dir + "/error.json");
    if (f) f << j.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"channel_lab: inviscid damping laboratory for stratified channel flow"};
  std::string config_path, out_dir;
  uint64_t seed = 0;
  int ny = 0, kmax = 0;
  bool list = false;
  app.add_option("--config", config_path, "JSON scenario config");
  app.add_option("--out", out_dir, "output directory (overrides config 'out')");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized audits");
  auto* ny_opt = app.add_option("--ny", ny, "grid points in y");
  auto* kmax_opt = app.add_option("--kmax", kmax, "largest wavenumber: stability scan range, nonlinear K");
  app.add_flag("--list-scenarios", list, "print the scenario names and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (list) {
    for (const std::string& s : scenario_names()) std::cout << s << "\n";
    return 0;
  }
  if (config_path.empty()) {
    std::cerr << "channel_lab: --config is required (or --list-scenarios)\n";
    return 2;
  }

  LabConfig cfg;
  try {
    cfg = parse_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (*ny_opt) cfg.profile.n_y = ny;
    if (*kmax_opt) {
      cfg.kmax = kmax;
      if (cfg.scenario == "nonlinear-demo") {
        cfg.nonlinear.solver.K = kmax;
        if (cfg.nonlinear.solver.M <= 3 * kmax) cfg.nonlinear.solver.M = 4 * kmax;
      }
    }
    if (!out_dir.empty()) cfg.out = out_dir;
    validate_config(cfg);
  } catch (const Error& e) {
    report_error("config", e, "");
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult r;
  try {
    r = run_scenario(cfg);
  } catch (const Error& e) {
    report_error("run", e, cfg.out);
    return 3;
  } catch (const std::exception& e) {
    report_error("run", Error("InternalError", e.what()), cfg.out);
    return 3;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    emit_outputs(r, config_to_json(cfg), cfg.out);
  } catch (const Error& e) {
    report_error("emit", e, "");
    return 3;
  }
  for (const Check& c : r.checks)
    std::printf("[%s] criterion %d: %s  value=%.6g bound=%.6g%s%s\n", c.pass ? "PASS" : "FAIL", c.criterion,
                c.name.c_str(), c.value, c.bound, c.detail.empty() ? "" : "  ", c.detail.c_str());
  std::printf("%s: %s (%.1f s), outputs in %s\n", r.scenario.c_str(), r.pass() ? "pass" : "FAIL", secs, cfg.out.c_str());
  return r.pass() ? 0 : 1;
}
