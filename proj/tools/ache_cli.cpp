// ache: simulate | simulate-1d | analyze | sweep | verify
#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <map>

#include "ache/error.hpp"
#include "ache/experiment.hpp"

namespace {

int execute(const ache::ExperimentConfig& c) {
  using ache::Mode;
  switch (c.mode) {
    case Mode::simulate: {
      const auto r = ache::simulate(c);
      fmt::print("simulate: t = {}, steps = {}, |c_perp| = {:.6g}, energy = {:.6g}\n", r.final.time,
                 r.final.step_index, r.records.back().norm_perp, r.records.back().energy);
      return 0;
    }
    case Mode::simulate_1d: {
      const auto tr = ache::simulate_1d(c);
      fmt::print("simulate-1d: t = {}, energy = {:.6g}\n", tr.t.back(), tr.energy.back());
      return 0;
    }
    case Mode::analyze: {
      const auto fit = ache::analyze(c);
      for (std::size_t i = 0; i < fit.nu_grid.size(); ++i)
        fmt::print("nu = {:<10g} lambda = {:.6g}\n", fit.nu_grid[i], fit.lambda[i]);
      fmt::print("exponent fit {:.4f}, predicted {:.4f}, delta0 {:.6g}\n", fit.exponent, fit.exponent_predicted,
                 fit.delta0);
      return 0;
    }
    case Mode::sweep: {
      const auto s = ache::run_sweep(c);
      for (const auto& r : s.rows) {
        if (r.ok)
          fmt::print("nu = {:<10g} lambda = {:.6g}\n", r.nu, r.lambda);
        else
          fmt::print("nu = {:<10g} FAILED: {}\n", r.nu, r.reason);
      }
      if (s.fitted) fmt::print("exponent fit {:.4f}, predicted {:.4f}\n", s.law.exponent, s.exponent_predicted);
      return 0;
    }
    case Mode::verify: {
      const auto v = ache::verify(c);
      fmt::print("lambda = {:.6g}, smallness_ok = {}\n", v.lambda, v.constants.smallness_ok);
      for (const auto& cr : v.criteria)
        fmt::print("{:<6} {:<24} {}\n", !cr.applicable ? "GATED" : cr.pass ? "PASS" : "FAIL", cr.name, cr.detail);
      if (v.exit_code != 0) fmt::print("first failing criterion: {}\n", v.first_failure);
      return v.exit_code;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Advective Cahn-Hilliard simulator and enhanced-dissipation analyzer"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"simulate", "run the 2D solver"},
      {"simulate-1d", "run the 1D solver from the streamwise average"},
      {"analyze", "semigroup decay rates and scaling fit"},
      {"sweep", "per-nu analyzer (and optional simulation) sweep"},
      {"verify", "end-to-end check of the decay theorem"}};

  std::string config_path;
  std::map<std::string, std::string> values;   // key -> flag value
  for (const auto& [verb, help] : verbs) {
    auto* sub = app.add_subcommand(verb, help);
    sub->add_option("-c,--config", config_path, "key = value config file");
    for (const auto& key : ache::config_keys()) {
      if (key.name == "mode") continue;
      sub->add_option("--" + key.name, values[verb + "\n" + key.name], key.range);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string verb = sub->get_name();
  ache::ConfigOverrides overrides{{"mode", verb}};
  for (const auto& key : ache::config_keys()) {
    if (key.name == "mode") continue;
    if (sub->count("--" + key.name) > 0) overrides.emplace_back(key.name, values[verb + "\n" + key.name]);
  }

  try {
    const auto config = ache::parse_config(config_path, overrides);
    return execute(config);
  } catch (const ache::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const ache::ParameterError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "runtime error: {}\n", e.what());
    return 3;
  }
}
