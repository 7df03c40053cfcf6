#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "frmg/dualtime.hpp"
#include "frmg/pmg.hpp"
#include "frmg/schemes.hpp"
#include "frmg/types.hpp"

namespace frmg::config {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("malformed config " + path + ": " + e.what());
  }
  return j;
}

/// Fully resolved run configuration, assembled from the config sections
/// `scheme`, `space`, `dualtime`, `cycle` and `sweep`.
struct ProblemConfig {
  schemes::ButcherTableau tab;
  schemes::BdfScheme bdf;

  int p = 4;
  double h = 1.0;
  double mu = 0.0;
  double alpha_a = 1.0;
  double alpha_d = 0.5;
  double k = 0.0;  // resolved wavenumber (possibly from khat)

  double dt = 0.2;
  double dtau = 0.05;
  int m = 1;

  std::optional<pmg::CycleSpec> cycle;
  json sweep;     // subcommand-specific keys, passed through
  json resolved;  // echo of the interpreted configuration

  dual::DualTimeConfig dualtime() const {
    dual::DualTimeConfig cfg;
    cfg.dt = dt;
    cfg.dtau = dtau;
    cfg.M = m;
    cfg.bdf = bdf;
    cfg.tab = tab;
    return cfg;
  }

  double k_nyquist() const { return std::min(M_PI / dt, (p + 1) * M_PI / h); }
};

inline schemes::ButcherTableau tableau_from_config(const json& scheme) {
  if (!scheme.contains("tableau")) return schemes::make_ssprk3();
  const auto& t = scheme.at("tableau");
  if (t.is_string()) {
    const std::string name = t.get<std::string>();
    if (name == "ssprk3") return schemes::make_ssprk3();
    throw InvalidInput("unknown tableau name '" + name +
                       "' (use \"ssprk3\" or an inline record)");
  }
  return schemes::load_tableau(t);
}

inline ProblemConfig parse_config(const json& j) {
  ProblemConfig cfg;
  const json scheme = j.value("scheme", json::object());
  cfg.tab = tableau_from_config(scheme);
  cfg.bdf = schemes::make_bdf(scheme.value("bdf", 2));

  const json space = j.value("space", json::object());
  cfg.p = space.value("p", 4);
  cfg.h = space.value("h", 1.0);
  cfg.mu = space.value("mu", 0.0);
  cfg.alpha_a = space.value("alpha_a", 1.0);
  cfg.alpha_d = space.value("alpha_d", 0.5);

  const json dt = j.value("dualtime", json::object());
  cfg.dt = dt.value("dt", 0.2);
  cfg.dtau = dt.value("dtau", 0.05);
  cfg.m = dt.value("m", 1);

  if (space.contains("k") && space.contains("khat"))
    throw InvalidInput("config: give either space.k or space.khat, not both");
  if (space.contains("k"))
    cfg.k = space.at("k").get<double>();
  else if (space.contains("khat"))
    cfg.k = space.at("khat").get<double>() * cfg.k_nyquist() / M_PI;

  if (j.contains("cycle")) {
    const auto& c = j.at("cycle");
    if (c.is_string()) {
      cfg.cycle = pmg::make_preset(c.get<std::string>(), cfg.p);
    } else if (c.contains("preset")) {
      cfg.cycle = pmg::make_preset(c.at("preset").get<std::string>(), cfg.p,
                                   c.value("n_s", 1), c.value("f_tau", 1.0),
                                   c.value("prolong_steps", 3));
    } else {
      cfg.cycle = pmg::cycle_from_json(c, cfg.p);
    }
  }
  cfg.sweep = j.value("sweep", json::object());

  cfg.resolved = j;
  cfg.resolved["space"]["k_resolved"] = cfg.k;
  cfg.resolved["space"]["k_nyquist"] = cfg.k_nyquist();
  if (cfg.cycle) cfg.resolved["cycle_resolved"] = pmg::cycle_to_json(*cfg.cycle);
  return cfg;
}

/// Resolves a preset name to a config path: $FRMG_PRESET_DIR, then the
/// compiled-in configs directory.
inline std::string preset_path(const std::string& name) {
  const char* env = std::getenv("FRMG_PRESET_DIR");
  std::string dir = env ? env :
#ifdef FRMG_PRESET_DIR
      FRMG_PRESET_DIR
#else
      "configs"
#endif
      ;
  return dir + "/" + name + ".json";
}

}  // namespace frmg::config
