#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chd/lab.hpp"

namespace chd {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail("RangeError", what);
}

// Copies known keys of an object into fields; anything else is UnknownKey.
struct Reader {
  const json& j;
  std::string path;
  std::vector<std::string> seen;

  template <class T>
  void get(const char* key, T& out) {
    seen.push_back(key);
    if (j.contains(key)) out = j.at(key).get<T>();
  }
  void finish() const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(seen.begin(), seen.end(), it.key()) == seen.end())
        fail("UnknownKey", "unknown key '" + path + it.key() + "'");
  }
};

const json& object_at(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_object()) fail("ParseError", std::string("'") + key + "' must be a table");
  return v;
}

}  // namespace

LabConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail("ParseError", e.what());
  }
  if (!j.is_object()) fail("ParseError", "config must be a table");
  if (!j.contains("scenario") || !j["scenario"].is_string()) fail("ParseError", "missing string key 'scenario'");
  LabConfig c;
  try {
    c = default_config(j["scenario"].get<std::string>());
    Reader top{j, "", {}};
    top.seen = {"scenario", "profile", "linear", "nonlinear", "multipliers"};
    top.get("ks", c.ks);
    top.get("kmax", c.kmax);
    top.get("seed", c.seed);
    top.get("out", c.out);
    top.get("audit_samples", c.audit_samples);
    if (j.contains("profile")) {
      // overlay on the scenario's default profile; unknown keys surface from the profile parser
      json merged = json::parse(profile_to_json(c.profile));
      merged.merge_patch(object_at(j, "profile"));
      c.profile = profile_from_json(merged.dump());
    }
    int n_y = c.profile.n_y;
    top.get("n_y", n_y);
    c.profile.n_y = n_y;
    top.finish();

    if (j.contains("linear")) {
      Reader r{object_at(j, "linear"), "linear.", {}};
      LinearSetup& l = c.linear;
      r.get("k", l.k);
      r.get("dt", l.dt);
      r.get("data_lo", l.data_lo);
      r.get("data_hi", l.data_hi);
      r.get("check_times", l.check_times);
      r.get("t_max", l.t_max);
      r.get("sample_dt", l.sample_dt);
      r.get("fit_lo", l.fit_lo);
      r.get("fit_hi", l.fit_hi);
      r.finish();
    }
    if (j.contains("nonlinear")) {
      Reader r{object_at(j, "nonlinear"), "nonlinear.", {}};
      NonlinearSetup& n = c.nonlinear;
      r.get("K", n.solver.K);
      r.get("M", n.solver.M);
      r.get("cfl", n.solver.cfl);
      r.get("dt", n.solver.dt);
      r.get("margin", n.solver.margin);
      r.get("support_tol", n.solver.support_tol);
      r.get("sample_dt", n.solver.sample_dt);
      r.get("pressure_tol", n.solver.pressure_tol);
      r.get("eps", n.eps);
      r.get("T", n.T);
      r.get("k_lo", n.k_lo);
      r.get("fit_lo", n.fit_lo);
      r.finish();
    }
    if (j.contains("multipliers")) {
      Reader r{object_at(j, "multipliers"), "multipliers.", {}};
      MultiplierParams& m = c.multipliers;
      r.get("s", m.s);
      r.get("sigma", m.sigma);
      r.get("mu", m.mu);
      r.get("lambda0", m.lambda0);
      r.get("lambda_prime", m.lambda_prime);
      r.get("delta_lambda", m.delta_lambda);
      r.get("q", m.q);
      r.get("c_kappa1", m.c_kappa1);
      r.finish();
    }
  } catch (const json::exception& e) {
    fail("ParseError", e.what());
  }
  validate_config(c);
  return c;
}

LabConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("IOError", "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const LabConfig& c) {
  const auto& names = scenario_names();
  require(std::find(names.begin(), names.end(), c.scenario) != names.end(), "unknown scenario '" + c.scenario + "'");
  const ProfileSpec& p = c.profile;
  require(p.n_y >= 33 && p.n_y <= 4097 && p.n_y % 2 == 1, "n_y must be odd and in [33, 4097], got " + std::to_string(p.n_y));
  for (int k : c.ks) require(k != 0 && std::abs(k) <= 64, "wavenumbers must be nonzero with |k| <= 64");
  require(c.kmax >= 1 && c.kmax <= 32, "kmax must lie in [1, 32]");
  require(c.audit_samples >= 0 && c.audit_samples <= 10000000, "audit_samples must lie in [0, 1e7]");
  if (c.scenario == "phi1-oracle") require(p.family == "couette_constant", "phi1-oracle compares against the Couette closed form");
  if (c.scenario == "wave-identities") require(p.family != "custom", "wave-identities refines the grid, custom samples cannot be refined");

  const LinearSetup& l = c.linear;
  require(l.k != 0 && std::abs(l.k) <= 64, "linear.k must be nonzero with |k| <= 64");
  require(l.dt > 0 && l.dt <= 1, "linear.dt must lie in (0, 1]");
  require(l.data_lo >= 0 && l.data_lo < l.data_hi && l.data_hi <= 1, "linear data support must satisfy 0 <= lo < hi <= 1");
  for (size_t i = 0; i < l.check_times.size(); ++i)
    require(l.check_times[i] >= 0 && (i == 0 || l.check_times[i] > l.check_times[i - 1]),
            "linear.check_times must be increasing and >= 0");
  require(l.t_max > 0 && l.sample_dt > 0 && l.sample_dt <= l.t_max, "linear.t_max, sample_dt must be positive, sample_dt <= t_max");
  require(l.fit_lo > 0 && l.fit_lo < l.fit_hi, "linear fit window needs 0 < fit_lo < fit_hi");

  const NonlinearSetup& n = c.nonlinear;
  require(n.solver.K >= 1 && n.solver.K <= 256, "nonlinear.K must lie in [1, 256]");
  require(n.solver.M > 3 * n.solver.K, "nonlinear.M must exceed 3K");
  require(n.solver.cfl > 0 && n.solver.cfl <= 2, "nonlinear.cfl must lie in (0, 2]");
  require(n.solver.dt >= 0, "nonlinear.dt must be >= 0 (0 picks the CFL step)");
  require(n.solver.margin >= 0 && n.solver.support_tol > 0 && n.solver.sample_dt > 0 && n.solver.pressure_tol > 0,
          "nonlinear margin >= 0 and support_tol, sample_dt, pressure_tol > 0");
  require(n.eps > 0 && n.eps <= 0.1, "nonlinear.eps must lie in (0, 0.1]");
  require(n.T > 0 && n.T <= 10000, "nonlinear.T must lie in (0, 1e4]");
  require(n.k_lo >= 1 && n.k_lo + 1 <= n.solver.K, "nonlinear.k_lo must satisfy 1 <= k_lo < K");
  require(n.fit_lo >= 0 && n.fit_lo < n.T, "nonlinear.fit_lo must lie in [0, T)");

  c.multipliers.resolved();
  try {
    build_profile(p);
  } catch (const Error& e) {
    fail("RangeError", std::string("profile rejected: ") + e.what());
  }
}

json config_to_json(const LabConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["profile"] = json::parse(profile_to_json(c.profile));
  j["ks"] = c.ks;
  j["kmax"] = c.kmax;
  j["seed"] = c.seed;
  // out is left out so runs into different directories hash the same
  j["audit_samples"] = c.audit_samples;
  const LinearSetup& l = c.linear;
  j["linear"] = {{"k", l.k},           {"dt", l.dt},           {"data_lo", l.data_lo},
                 {"data_hi", l.data_hi}, {"check_times", l.check_times}, {"t_max", l.t_max},
                 {"sample_dt", l.sample_dt}, {"fit_lo", l.fit_lo},   {"fit_hi", l.fit_hi}};
  const NonlinearSetup& n = c.nonlinear;
  j["nonlinear"] = {{"K", n.solver.K},
                    {"M", n.solver.M},
                    {"cfl", n.solver.cfl},
                    {"dt", n.solver.dt},
                    {"margin", n.solver.margin},
                    {"support_tol", n.solver.support_tol},
                    {"sample_dt", n.solver.sample_dt},
                    {"pressure_tol", n.solver.pressure_tol},
                    {"eps", n.eps},
                    {"T", n.T},
                    {"k_lo", n.k_lo},
                    {"fit_lo", n.fit_lo}};
  const MultiplierParams m = c.multipliers.resolved();
  j["multipliers"] = {{"s", m.s},
                      {"sigma", m.sigma},
                      {"mu", m.mu},
                      {"lambda0", m.lambda0},
                      {"lambda_prime", m.lambda_prime},
                      {"delta_lambda", m.delta_lambda},
                      {"q", m.q},
                      {"c_kappa1", m.c_kappa1}};
  return j;
}

// ---------------------------------------------------------------------------

bool ScenarioResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

bool ScenarioResult::criterion_pass(int criterion) const {
  bool any = false;
  for (const Check& c : checks)
    if (c.criterion == criterion) {
      any = true;
      if (!c.pass) return false;
    }
  return any;
}

void write_table_csv(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  for (size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  char buf[32];
  for (const Vec& row : t.rows) {
    if (row.size() != t.columns.size()) fail("ShapeMismatch", "row width differs from the header in " + t.name);
    for (size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", row[i]);
      out << buf;
    }
    out << "\n";
  }
  if (!out) fail("IOError", "write failed for " + path);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("IOError", "cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char two[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

json summary_json(const ScenarioResult& r, const json& config) {
  json checks = json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"criterion", c.criterion},
                      {"name", c.name},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"detail", c.detail}});
  return {{"scenario", r.scenario}, {"pass", r.pass()}, {"checks", checks}, {"metrics", r.metrics}, {"config", config}};
}

std::vector<ManifestEntry> emit_outputs(const ScenarioResult& r, const json& config, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail("IOError", "cannot create output directory " + dir);
  std::vector<std::string> names{"summary.json"};
  {
    std::ofstream out(dir + "/summary.json");
    if (!out) fail("IOError", "cannot write " + dir + "/summary.json");
    out << summary_json(r, config).dump(2) << "\n";
    if (!out) fail("IOError", "write failed for " + dir + "/summary.json");
  }
  for (const Table& t : r.tables) {
    write_table_csv(dir + "/" + t.name + ".csv", t);
    names.push_back(t.name + ".csv");
  }
  for (const Artifact& a : r.files) {
    a.write(dir + "/" + a.name);
    names.push_back(a.name);
  }
  std::sort(names.begin(), names.end());
  std::vector<ManifestEntry> entries;
  json m = json::array();
  for (const std::string& n : names) {
    ManifestEntry e{n, sha256_file(dir + "/" + n), uint64_t(fs::file_size(dir + "/" + n))};
    m.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    entries.push_back(e);
  }
  std::ofstream out(dir + "/manifest.json");
  if (!out) fail("IOError", "cannot write " + dir + "/manifest.json");
  out << json{{"files", m}}.dump(2) << "\n";
  if (!out) fail("IOError", "write failed for " + dir + "/manifest.json");
  return entries;
}

}  // namespace chd
