#include "ache/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "ache/error.hpp"
#include "ache/field_algebra.hpp"
#include "ache/io.hpp"
#include "ache/rng.hpp"
#include "ache/snapshot.hpp"

namespace ache {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::string fmt_double(double x) { return fmt::format("{}", x); }

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (v.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(x))
    throw ConfigError(fmt::format("{}: expected a finite number, got '{}'", key, v));
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (v.empty() || r.ec != std::errc() || r.ptr != end)
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, v));
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
}

// Range checks report the documented range verbatim.
void check(bool ok, const std::string& key, const std::string& v, const std::string& range) {
  if (!ok) throw ConfigError(fmt::format("{} = {} is out of range: expected {}", key, v, range));
}

struct KeyEntry {
  ConfigKey key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

KeyEntry real_key(std::string name, std::string range, double ExperimentConfig::*field, double lo, double hi,
                  bool lo_open) {
  KeyEntry e;
  e.key = {name, range};
  e.set = [=](ExperimentConfig& c, const std::string& v) {
    const double x = to_double(name, v);
    check((lo_open ? x > lo : x >= lo) && x <= hi, name, v, range);
    c.*field = x;
  };
  e.get = [=](const ExperimentConfig& c) { return fmt_double(c.*field); };
  return e;
}

KeyEntry solver_real(std::string name, std::string range, double SolverConfig::*field, double lo, double hi,
                     bool lo_open) {
  KeyEntry e;
  e.key = {name, range};
  e.set = [=](ExperimentConfig& c, const std::string& v) {
    const double x = to_double(name, v);
    check((lo_open ? x > lo : x >= lo) && x <= hi, name, v, range);
    c.solver.*field = x;
  };
  e.get = [=](const ExperimentConfig& c) { return fmt_double(c.solver.*field); };
  return e;
}

KeyEntry bool_key(std::string name, std::function<bool&(ExperimentConfig&)> ref) {
  KeyEntry e;
  e.key = {name, "true | false"};
  e.set = [=](ExperimentConfig& c, const std::string& v) { ref(c) = to_bool(name, v); };
  e.get = [=](const ExperimentConfig& c) {
    return ref(const_cast<ExperimentConfig&>(c)) ? std::string("true") : std::string("false");
  };
  return e;
}

KeyEntry choice_key(std::string name, std::vector<std::string> choices, std::string ExperimentConfig::*field) {
  std::string range;
  for (const auto& s : choices) range += (range.empty() ? "" : " | ") + s;
  KeyEntry e;
  e.key = {name, range};
  e.set = [=](ExperimentConfig& c, const std::string& v) {
    check(std::find(choices.begin(), choices.end(), v) != choices.end(), name, v, range);
    c.*field = v;
  };
  e.get = [=](const ExperimentConfig& c) { return c.*field; };
  return e;
}

KeyEntry path_key(std::string name, std::filesystem::path ExperimentConfig::*field) {
  KeyEntry e;
  e.key = {name, "path"};
  e.set = [=](ExperimentConfig& c, const std::string& v) { c.*field = v; };
  e.get = [=](const ExperimentConfig& c) { return (c.*field).string(); };
  return e;
}

const std::vector<std::pair<std::string, Mode>> mode_names{{"simulate", Mode::simulate},
                                                           {"simulate-1d", Mode::simulate_1d},
                                                           {"analyze", Mode::analyze},
                                                           {"sweep", Mode::sweep},
                                                           {"verify", Mode::verify}};

std::vector<KeyEntry> build_table() {
  std::vector<KeyEntry> t;
  {
    KeyEntry e;
    e.key = {"mode", "simulate | simulate-1d | analyze | sweep | verify"};
    e.set = [range = e.key.range](ExperimentConfig& c, const std::string& v) {
      const std::string name = v == "analyze-semigroup" ? "analyze" : v;
      for (const auto& [n, m] : mode_names)
        if (n == name) {
          c.mode = m;
          return;
        }
      check(false, "mode", v, range);
    };
    e.get = [](const ExperimentConfig& c) { return to_string(c.mode); };
    t.push_back(e);
  }
  {
    KeyEntry e;
    e.key = {"output_dir", "nonempty path"};
    e.set = [](ExperimentConfig& c, const std::string& v) {
      check(!v.empty(), "output_dir", v, "nonempty path");
      c.output_dir = v;
    };
    e.get = [](const ExperimentConfig& c) { return c.output_dir.string(); };
    t.push_back(e);
  }
  {
    KeyEntry e;
    e.key = {"seed", "integer in [0, 2^64)"};
    e.set = [](ExperimentConfig& c, const std::string& v) {
      std::uint64_t x = 0;
      const auto* end = v.data() + v.size();
      const auto r = std::from_chars(v.data(), end, x);
      check(!v.empty() && r.ec == std::errc() && r.ptr == end, "seed", v, "integer in [0, 2^64)");
      c.seed = x;
    };
    e.get = [](const ExperimentConfig& c) { return std::to_string(c.seed); };
    t.push_back(e);
  }

  t.push_back(solver_real("solver.mu", "(0, 100]", &SolverConfig::mu, 0.0, 100.0, true));
  t.push_back(solver_real("solver.nu", "[0, 100]", &SolverConfig::nu, 0.0, 100.0, false));
  for (const char* axis : {"nx", "ny"}) {
    const std::string name = std::string("solver.") + axis;
    const bool is_x = axis[1] == 'x';
    KeyEntry e;
    e.key = {name, "even integer in [8, 4096]"};
    e.set = [name, is_x](ExperimentConfig& c, const std::string& v) {
      const long long n = to_integer(name, v);
      check(n >= 8 && n <= 4096 && n % 2 == 0, name, v, "even integer in [8, 4096]");
      (is_x ? c.solver.grid.nx : c.solver.grid.ny) = static_cast<int>(n);
    };
    e.get = [is_x](const ExperimentConfig& c) { return std::to_string(is_x ? c.solver.grid.nx : c.solver.grid.ny); };
    t.push_back(e);
  }
  t.push_back(solver_real("solver.dt", "(0, 1]", &SolverConfig::dt, 0.0, 1.0, true));
  t.push_back(solver_real("solver.t_end", "[0, 1e7]", &SolverConfig::t_end, 0.0, 1e7, false));
  t.push_back(solver_real("solver.stabilization", "[0, 1000]", &SolverConfig::stabilization, 0.0, 1e3, false));
  for (const char* which : {"snapshot_stride", "series_stride"}) {
    const std::string name = std::string("solver.") + which;
    const bool snap = which[1] == 'n';
    KeyEntry e;
    e.key = {name, "integer in [1, 1e12]"};
    e.set = [name, snap](ExperimentConfig& c, const std::string& v) {
      const long long n = to_integer(name, v);
      check(n >= 1 && n <= 1000000000000LL, name, v, "integer in [1, 1e12]");
      (snap ? c.solver.snapshot_stride : c.solver.series_stride) = static_cast<long>(n);
    };
    e.get = [snap](const ExperimentConfig& c) {
      return std::to_string(snap ? c.solver.snapshot_stride : c.solver.series_stride);
    };
    t.push_back(e);
  }
  t.push_back(bool_key("solver.pin_mean", [](ExperimentConfig& c) -> bool& { return c.solver.pin_mean; }));
  t.push_back(bool_key("solver.disable_cube", [](ExperimentConfig& c) -> bool& { return c.solver.disable_cube; }));

  t.push_back(choice_key("profile.name", {"zero", "sin", "cos", "sin3", "table"}, &ExperimentConfig::profile_name));
  t.push_back(real_key("profile.amplitude", "[-1000, 1000]", &ExperimentConfig::profile_amplitude, -1e3, 1e3, false));
  t.push_back(path_key("profile.table", &ExperimentConfig::profile_table));

  t.push_back(choice_key("initial.preset", {"remark-example", "random-bandlimited", "one-d-only", "snapshot"},
                         &ExperimentConfig::initial_preset));
  t.push_back(real_key("initial.epsilon", "[-1000, 1000]", &ExperimentConfig::epsilon, -1e3, 1e3, false));
  {
    KeyEntry e;
    e.key = {"initial.band_limit", "integer in [1, 2047]"};
    e.set = [](ExperimentConfig& c, const std::string& v) {
      const long long n = to_integer("initial.band_limit", v);
      check(n >= 1 && n <= 2047, "initial.band_limit", v, "integer in [1, 2047]");
      c.band_limit = static_cast<int>(n);
    };
    e.get = [](const ExperimentConfig& c) { return std::to_string(c.band_limit); };
    t.push_back(e);
  }
  t.push_back(path_key("initial.snapshot", &ExperimentConfig::initial_snapshot));

  t.push_back(real_key("constants.c_star", "(0, 1e6]", &ExperimentConfig::c_star, 0.0, 1e6, true));

  {
    KeyEntry e;
    e.key = {"analyzer.nu_grid", "nonempty comma-separated list of finite numbers"};
    e.set = [range = e.key.range](ExperimentConfig& c, const std::string& v) {
      std::vector<double> grid;
      std::stringstream in(v);
      for (std::string item; std::getline(in, item, ',');) grid.push_back(to_double("analyzer.nu_grid", trim(item)));
      check(!grid.empty(), "analyzer.nu_grid", v, range);
      c.nu_grid = std::move(grid);
    };
    e.get = [](const ExperimentConfig& c) {
      std::string s;
      for (double x : c.nu_grid) s += (s.empty() ? "" : ", ") + fmt_double(x);
      return s;
    };
    t.push_back(e);
  }
  t.push_back(real_key("analyzer.mu", "(0, 1000]", &ExperimentConfig::analyzer_mu, 0.0, 1e3, true));
  {
    KeyEntry e;
    e.key = {"analyzer.K", "integer in [1, 512]"};
    e.set = [](ExperimentConfig& c, const std::string& v) {
      const long long n = to_integer("analyzer.K", v);
      check(n >= 1 && n <= 512, "analyzer.K", v, "integer in [1, 512]");
      c.K = static_cast<int>(n);
    };
    e.get = [](const ExperimentConfig& c) { return std::to_string(c.K); };
    t.push_back(e);
  }
  {
    KeyEntry e;
    e.key = {"analyzer.M", "even integer in [32, 2048]"};
    e.set = [](ExperimentConfig& c, const std::string& v) {
      const long long n = to_integer("analyzer.M", v);
      check(n >= 32 && n <= 2048 && n % 2 == 0, "analyzer.M", v, "even integer in [32, 2048]");
      c.M = static_cast<int>(n);
    };
    e.get = [](const ExperimentConfig& c) { return std::to_string(c.M); };
    t.push_back(e);
  }
  t.push_back(real_key("analyzer.t_max", "(0, 1e9]", &ExperimentConfig::t_max, 0.0, 1e9, true));
  {
    KeyEntry e;
    e.key = {"analyzer.lambda", "auto or a number in (0, 1e6]"};
    e.set = [range = e.key.range](ExperimentConfig& c, const std::string& v) {
      if (v == "auto") {
        c.lambda = 0.0;
        return;
      }
      const double x = to_double("analyzer.lambda", v);
      check(x > 0 && x <= 1e6, "analyzer.lambda", v, range);
      c.lambda = x;
    };
    e.get = [](const ExperimentConfig& c) { return c.lambda > 0 ? fmt_double(c.lambda) : std::string("auto"); };
    t.push_back(e);
  }

  t.push_back(bool_key("sweep.simulate", [](ExperimentConfig& c) -> bool& { return c.sweep_simulate; }));
  t.push_back(bool_key("monitor.full_pairs", [](ExperimentConfig& c) -> bool& { return c.full_pairs; }));
  {
    KeyEntry e;
    e.key = {"rng.algorithm", Rng::algorithm};
    e.set = [](ExperimentConfig&, const std::string& v) { check(v == Rng::algorithm, "rng.algorithm", v, Rng::algorithm); };
    e.get = [](const ExperimentConfig&) { return std::string(Rng::algorithm); };
    t.push_back(e);
  }
  return t;
}

const std::vector<KeyEntry>& table() {
  static const std::vector<KeyEntry> t = build_table();
  return t;
}

const KeyEntry& lookup(const std::string& key) {
  for (const auto& e : table())
    if (e.key.name == key) return e;
  throw ConfigError(fmt::format("unknown key '{}'", key));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError(fmt::format("cannot create output directory '{}'", dir.string()));
}

// Validates the solver against the profile; bad values are configuration
// mistakes, not numerical failures.
void validate_solver(const SolverConfig& s, const ShearProfile& profile) {
  try {
    validate(s, profile);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

ScalingOptions scaling_options(const ExperimentConfig& c) {
  return {.K = c.K, .M = c.M, .t_max = c.t_max, .threads = worker_threads()};
}

double predicted_exponent(const ShearProfile& profile) {
  if (profile.is_zero()) return 1.0;
  const auto cp = profile.critical_points();
  return cp.degenerate ? nan_value : 2.0 * cp.m_max / (2.0 * cp.m_max + 1.0);
}

std::vector<double> column(const std::vector<DiagnosticsRecord>& r, double DiagnosticsRecord::*f) {
  std::vector<double> out;
  out.reserve(r.size());
  for (const auto& x : r) out.push_back(x.*f);
  return out;
}

}  // namespace

std::string to_string(Mode mode) {
  for (const auto& [n, m] : mode_names)
    if (m == mode) return n;
  return "unknown";
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : table()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

ExperimentConfig load_config(const std::string& text, const ConfigOverrides& overrides) {
  ExperimentConfig c;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto& entry = lookup(key);
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError(fmt::format("duplicate key '{}' (lines {} and {})", key, it->second, line_no));
    entry.set(c, value);
  }
  for (const auto& [key, value] : overrides) lookup(key).set(c, trim(value));

  if (c.profile_name == "table" && c.profile_table.empty())
    throw ConfigError("profile.table must be set when profile.name = table");
  if (c.initial_preset == "snapshot" && c.initial_snapshot.empty())
    throw ConfigError("initial.snapshot must be set when initial.preset = snapshot");
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::string text;
  if (!path.empty()) {
    if (!std::filesystem::exists(path)) throw ConfigError(fmt::format("config file '{}' not found", path.string()));
    text = io::read_text(path);
  }
  auto c = load_config(text, overrides);
  ensure_dir(c.output_dir);
  io::write_atomic(c.output_dir / "config.resolved", resolved_text(c));
  return c;
}

std::string resolved_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& e : table()) out += fmt::format("{} = {}\n", e.key.name, e.get(config));
  return out;
}

ShearProfile make_profile(const ExperimentConfig& config) {
  if (config.profile_name == "table") {
    auto p = ShearProfile::from_file(config.profile_table);
    if (config.profile_amplitude != 1.0) {
      const auto s = p.sample(config.solver.grid.ny);
      std::vector<double> v(s.values().begin(), s.values().end());
      for (double& x : v) x *= config.profile_amplitude;
      return ShearProfile::tabulated(std::move(v), p.name());
    }
    return p;
  }
  return ShearProfile::builtin(config.profile_name, config.profile_amplitude);
}

Field2D make_initial(const std::string& preset, GridSpec grid, std::uint64_t seed, double epsilon, int band_limit,
                     const std::filesystem::path& snapshot) {
  if (preset == "remark-example") {
    return Field2D::sample(grid, [epsilon](double x, double y) {
      return std::sin(two_pi * y) + epsilon * std::sin(two_pi * x) * std::sin(two_pi * y);
    });
  }
  if (preset == "one-d-only") return Field2D::sample(grid, [](double, double y) { return std::sin(two_pi * y); });
  if (preset == "random-bandlimited") {
    if (band_limit < 1 || 2 * band_limit >= std::min(grid.nx, grid.ny))
      throw ConfigError(fmt::format("initial.band_limit = {} must lie in [1, {})", band_limit,
                                    std::min(grid.nx, grid.ny) / 2));
    Rng rng(seed);
    Spectrum2D s(grid);
    for (int k2 = -band_limit; k2 <= band_limit; ++k2)
      for (int k1 = 0; k1 <= band_limit; ++k1) {
        if (k1 * k1 + k2 * k2 > band_limit * band_limit) continue;
        if (k1 == 0 && k2 <= 0) continue;
        const double re = rng.normal(), im = rng.normal();
        s(s.row_of(k2), k1) = cplx{re, im};
        if (k1 == 0) s(s.row_of(-k2), 0) = cplx{re, -im};
      }
    const auto f = inverse(s);
    return f * (1.0 / l2_norm(f));
  }
  if (preset == "snapshot") {
    auto snap = read_snapshot(snapshot);
    if (snap.field.grid().nx != grid.nx || snap.field.grid().ny != grid.ny)
      throw ConfigError(fmt::format("snapshot '{}' is {}x{} but the solver grid is {}x{}", snapshot.string(),
                                    snap.field.grid().nx, snap.field.grid().ny, grid.nx, grid.ny));
    return std::move(snap.field);
  }
  throw ConfigError(fmt::format("unknown preset '{}'", preset));
}

Field2D make_initial(const ExperimentConfig& c) {
  return make_initial(c.initial_preset, c.solver.grid, c.seed, c.epsilon, c.band_limit, c.initial_snapshot);
}

int worker_threads() {
  if (const char* env = std::getenv("ACHE_NUM_THREADS"); env && *env) {
    const std::string v = env;
    int n = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || n < 1)
      throw ConfigError(fmt::format("ACHE_NUM_THREADS = {} must be a positive integer", v));
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunResult simulate(const ExperimentConfig& c) {
  const auto profile = make_profile(c);
  validate_solver(c.solver, profile);
  const auto init = make_initial(c);
  ensure_dir(c.output_dir);

  auto r = run(c.solver, init, profile, {.snapshot_dir = c.output_dir / "snapshots", .record_laplacian = false,
                                         .keep_fields = false, .on_record = {}});
  write_series_csv(c.output_dir / "series.csv", r.records);

  KeyValueReport rep;
  rep.set("mode", "simulate");
  rep.set("final.time", r.final.time);
  rep.set("final.step", static_cast<long long>(r.final.step_index));
  rep.set("final.energy", r.records.back().energy);
  rep.set("final.norm_perp_L2", r.records.back().norm_perp);
  rep.set("mass.max_pin_drift", r.max_drift);
  rep.write(c.output_dir / "summary.txt");
  return r;
}

Trajectory1D simulate_1d(const ExperimentConfig& c) {
  validate_solver(c.solver, ShearProfile::zero());
  const auto init = decompose(make_initial(c)).parallel;
  ensure_dir(c.output_dir);
  auto tr = solve_1d(c.solver, init);

  io::CsvTable series({"t", "energy", "mass"});
  for (std::size_t i = 0; i < tr.t.size(); ++i) series.add_row(std::vector<double>{tr.t[i], tr.energy[i], tr.mass[i]});
  series.write(c.output_dir / "series_1d.csv");
  io::CsvTable final({"x2", "c"});
  for (int j = 0; j < tr.final.n(); ++j)
    final.add_row(std::vector<double>{static_cast<double>(j) / tr.final.n(), tr.final[j]});
  final.write(c.output_dir / "final_1d.csv");
  return tr;
}

RateFit analyze(const ExperimentConfig& c) {
  const auto profile = make_profile(c);
  ensure_dir(c.output_dir);
  const auto opt = scaling_options(c);
  RateFit fit;
  if (c.nu_grid.size() >= 4) {
    fit = scaling_fit(profile, c.nu_grid, c.analyzer_mu, opt);
  } else {
    fit.nu_grid = c.nu_grid;
    fit.mu = c.analyzer_mu;
    fit.delta0 = fit.exponent = nan_value;
    fit.exponent_predicted = predicted_exponent(profile);
    for (double nu : c.nu_grid) {
      if (!(nu > 0)) throw ParameterError(fmt::format("nu = {} must be > 0", nu));
      const auto blocks = build_blocks(profile, c.K, c.analyzer_mu * nu, c.M);
      fit.curves.push_back(decay_curve(blocks, c.t_max));
      fit.lambda.push_back(fit_rate(fit.curves.back()));
    }
  }
  write_curves_csv(c.output_dir / "curves.csv", fit);
  write_summary_csv(c.output_dir / "summary.csv", fit);
  KeyValueReport rep;
  rep.set("mode", "analyze");
  rep.set("profile", profile.name());
  rep.set("mu", fit.mu);
  rep.set("m", static_cast<long long>(fit.m));
  rep.set("exponent_fit", fit.exponent);
  rep.set("exponent_predicted", fit.exponent_predicted);
  rep.set("delta0_fit", fit.delta0);
  for (std::size_t i = 0; i < fit.nu_grid.size(); ++i) rep.set(fmt::format("lambda[{}]", fit.nu_grid[i]), fit.lambda[i]);
  rep.write(c.output_dir / "analyze.txt");
  return fit;
}

SweepResult run_sweep(const ExperimentConfig& c) {
  if (c.nu_grid.empty()) throw ConfigError("analyzer.nu_grid is empty");
  const auto profile = make_profile(c);
  ensure_dir(c.output_dir);
  ScalingOptions opt = scaling_options(c);
  opt.threads = 1;
  const Field2D init = c.sweep_simulate ? make_initial(c) : Field2D::zeros(c.solver.grid);

  const std::size_t n = c.nu_grid.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  auto job = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.nu = c.nu_grid[i];
    try {
      if (!(row.nu > 0)) throw ParameterError(fmt::format("nu = {} must be > 0", row.nu));
      row.lambda = measure_rate(profile, c.analyzer_mu * row.nu, opt);
      if (c.sweep_simulate) {
        SolverConfig s = c.solver;
        s.nu = row.nu;
        validate(s, profile);
        const double lambda_sim = s.mu == c.analyzer_mu ? row.lambda : measure_rate(profile, s.mu * row.nu, opt);
        const auto dir = c.output_dir / fmt::format("nu_{}", i);
        ensure_dir(dir);
        const auto r = run(s, init, profile);
        write_series_csv(dir / "series.csv", r.records);
        const auto t = column(r.records, &DiagnosticsRecord::t);
        const auto np = column(r.records, &DiagnosticsRecord::norm_perp);
        const auto v = theorem_check(t, np, lambda_sim, np.front());
        row.rate_ratio = v.rate_ratio;
        row.theorem_holds = v.holds ? 1 : 0;
      }
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.reason = e.what();
    }
  };
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) job(i);
  };
  const int threads = std::clamp<int>(worker_threads(), 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  // Failed rows with non-numeric nu still sort deterministically.
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    const bool an = std::isnan(a.nu), bn = std::isnan(b.nu);
    return an != bn ? bn : (!an && a.nu < b.nu);
  });

  SweepResult out;
  out.rows = rows;
  out.exponent_predicted = predicted_exponent(profile);
  RateFit fit;
  fit.mu = c.analyzer_mu;
  fit.exponent_predicted = out.exponent_predicted;
  for (const auto& r : rows)
    if (r.ok) {
      fit.nu_grid.push_back(r.nu);
      fit.lambda.push_back(r.lambda);
    }
  if (fit.nu_grid.size() >= 2) {
    try {
      out.law = fit_power_law(fit.nu_grid, fit.lambda);
      out.fitted = true;
    } catch (const ParameterError&) {
    }
  }
  fit.exponent = out.fitted ? out.law.exponent : nan_value;
  fit.delta0 = out.fitted ? out.law.delta0 : nan_value;

  io::CsvTable csv({"nu", "lambda_fit", "rate_ratio", "theorem_holds", "status", "reason"});
  for (const auto& r : rows) {
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    csv.add_row(std::vector<std::string>{io::format_double(r.nu), io::format_double(r.lambda),
                                         io::format_double(r.rate_ratio),
                                         r.theorem_holds < 0 ? "nan" : std::to_string(r.theorem_holds),
                                         r.ok ? "ok" : "failed", reason});
  }
  csv.write(c.output_dir / "sweep.csv");
  write_summary_csv(c.output_dir / "summary.csv", fit);

  KeyValueReport rep;
  rep.set("mode", "sweep");
  rep.set("rows", static_cast<long long>(rows.size()));
  rep.set("failures", static_cast<long long>(std::count_if(rows.begin(), rows.end(), [](auto& r) { return !r.ok; })));
  rep.set("exponent_fit", fit.exponent);
  rep.set("delta0_fit", fit.delta0);
  rep.set("exponent_predicted", fit.exponent_predicted);
  rep.write(c.output_dir / "sweep.txt");
  return out;
}

VerifyResult verify(const ExperimentConfig& c) {
  const auto profile = make_profile(c);
  validate_solver(c.solver, profile);
  const auto init = make_initial(c);
  ensure_dir(c.output_dir);
  const double mu = c.solver.mu, nu = c.solver.nu;

  const double lambda = c.lambda > 0 ? c.lambda : measure_rate(profile, mu * nu, scaling_options(c));
  const auto k = constants(init, mu, nu, lambda, c.c_star, profile);
  std::optional<RunResult> r;
  try {
    r = run(c.solver, init, profile, {.snapshot_dir = c.output_dir / "snapshots", .record_laplacian = true,
                                      .keep_fields = false, .on_record = {}});
  } catch (const NumericalError& e) {
    // Keep what is known so far.
    KeyValueReport rep;
    rep.set("mode", "verify");
    rep.set("lambda", lambda);
    rep.set("smallness_ok", k.smallness_ok);
    rep.add(k);
    rep.set("exit_code", 3LL);
    rep.set("first_failure", std::string("simulation: ") + e.what());
    rep.write(c.output_dir / "report.txt");
    throw;
  }
  VerifyResult out{.criteria = {}, .lambda = lambda, .constants = k, .theorem = {}, .bootstrap = {},
                   .run = std::move(*r), .one_d_error = nan_value, .exit_code = 0, .first_failure = {}};
  const bool small = out.constants.smallness_ok;
  const auto& rec = out.run.records;
  write_series_csv(c.output_dir / "series.csv", rec);

  const auto t = column(rec, &DiagnosticsRecord::t);
  const auto np = column(rec, &DiagnosticsRecord::norm_perp);
  out.theorem = theorem_check(t, np, out.lambda, np.front());
  out.bootstrap = bootstrap_monitor(rec, out.constants, mu, nu, {.floor = 1e-10, .full_pairs = c.full_pairs,
                                                                  .max_pairs = 10000});
  out.constants.b0_empirical = out.bootstrap.b0_empirical;

  auto add = [&](std::string name, bool gated, bool pass, std::string detail) {
    out.criteria.push_back({std::move(name), !gated || small, pass, std::move(detail)});
  };

  add("theorem_bound", true, out.theorem.holds,
      fmt::format("worst margin {:.6g} at t = {:.6g}, {} violations", out.theorem.worst_margin, out.theorem.worst_t,
                  out.theorem.violations));
  if (!out.theorem.fit_error.empty()) {
    add("decay_rate", true, false, out.theorem.fit_error);
  } else {
    add("decay_rate", true, out.theorem.fitted_rate >= 0.2 * out.lambda,
        fmt::format("fitted {:.6g} vs 0.2 lambda = {:.6g}", out.theorem.fitted_rate, 0.2 * out.lambda));
  }

  const double mass0 = rec.front().mass;
  double drift = 0.0;
  for (const auto& r : rec) drift = std::max(drift, std::abs(r.mass - mass0));
  add("mass_conservation", false, drift <= 1e-10, fmt::format("max drift {:.3g}", drift));

  add("bootstrap", true, out.bootstrap.all_pass(),
      fmt::format("H1 {} H2 {} H3 {} H4 {}", out.bootstrap.h1.pass, out.bootstrap.h2.pass, out.bootstrap.h3.pass,
                  out.bootstrap.h4.pass));

  const auto tr = solve_1d(c.solver, decompose(init).parallel);
  out.one_d_error = l2_norm(decompose(out.run.final.field).parallel - tr.final);
  const double tol = std::max(1e-2, 10.0 * rec.back().norm_perp);
  add("one_dimensionalization", true, out.one_d_error <= tol,
      fmt::format("|c_par - c_1d| = {:.6g}, tolerance {:.6g}", out.one_d_error, tol));

  for (const auto& cr : out.criteria)
    if (cr.applicable && !cr.pass) {
      out.exit_code = 1;
      out.first_failure = cr.name + ": " + cr.detail;
      break;
    }

  KeyValueReport rep;
  rep.set("mode", "verify");
  rep.set("lambda", out.lambda);
  rep.set("mu", mu);
  rep.set("nu", nu);
  rep.set("smallness_ok", small);
  rep.add(out.constants);
  rep.add(out.theorem);
  rep.add(out.bootstrap);
  rep.set("mass.max_drift", drift);
  rep.set("mass.max_pin_drift", out.run.max_drift);
  rep.set("one_d.error", out.one_d_error);
  rep.set("one_d.tolerance", tol);
  for (const auto& cr : out.criteria) {
    rep.set("criterion." + cr.name, !cr.applicable ? "GATED" : cr.pass ? "PASS" : "FAIL");
    rep.set("criterion." + cr.name + ".detail", cr.detail);
  }
  rep.set("exit_code", static_cast<long long>(out.exit_code));
  rep.set("first_failure", out.first_failure.empty() ? "none" : out.first_failure);
  rep.write(c.output_dir / "report.txt");
  return out;
}

}  // namespace ache
