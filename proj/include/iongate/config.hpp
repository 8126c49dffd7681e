#pragma once

// JSON run configuration: schema-validated, unknown keys rejected, physical
// quantities checked positive. All downstream numerics use nu1 = 1 units.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "iongate/errors.hpp"
#include "iongate/trap.hpp"

namespace iongate {

using nlohmann::json;

struct TargetConfig {
  std::string kind = "all_to_all";  // all_to_all | nearest_neighbour | nn_with_nnn | ssh | custom
  double phi = 1.5707963267948966;  // coupling scale (rad)
  double extra = 0.0;               // nnn ratio or ssh bond alternation
  int stagger = 0;                  // ssh pattern offset
  std::vector<std::vector<double>> custom;  // custom coupling matrix
};

struct GateConfig {
  double T_in_com_periods = 10.0;
  double margin = 0.35;
  TargetConfig target;
  std::vector<std::string> robust;  // subset of {timing, freq, optical}
  int timing_order = 1;
  int reference_mode = 0;
  bool allow_speed_limit = false;
};

struct SolverConfig {
  std::uint64_t seed = 1;
  int restarts = 32;
  int max_iterations = 4000;
  double tol_quad = 1e-6;
  double tol_cc = 4e-5;
  bool global_stage = false;
};

struct VerifyConfig {
  std::string fidelity_mode = "exact";  // exact | approx | both
  std::vector<double> nbar;             // per-mode or single broadcast value
  bool oracle = false;
  int n_max = 20;
};

struct RunConfig {
  int n_ions = 2;
  TrapModel trap;
  GateConfig gate;
  SolverConfig solver;
  VerifyConfig verify;
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
inline void read_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

inline void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ConfigError(std::string("config: '") + name + "' must be positive");
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using detail::check_positive;
  using detail::read_to;
  using detail::require_keys;
  RunConfig cfg;
  require_keys(j, "root", {"n_ions", "trap", "gate", "solver", "verify"});
  read_to(j, "n_ions", cfg.n_ions);
  if (cfg.n_ions < 1) throw ConfigError("config: n_ions must be >= 1");

  if (j.contains("trap")) {
    const json& t = j.at("trap");
    require_keys(t, "trap",
                 {"kind", "nu1_hz", "mass_amu", "wavelength_nm", "wave_number", "spacing",
                  "curvature", "custom_nu", "custom_O", "custom_eta"});
    std::string kind = "harmonic";
    read_to(t, "kind", kind);
    if (kind == "harmonic") cfg.trap.kind = TrapKind::harmonic;
    else if (kind == "equal_spaced") cfg.trap.kind = TrapKind::equal_spaced;
    else if (kind == "custom") cfg.trap.kind = TrapKind::custom;
    else throw ConfigError("config: trap.kind must be harmonic|equal_spaced|custom");
    double nu1_hz = 400e3, mass_amu = 87.905;
    read_to(t, "nu1_hz", nu1_hz);
    read_to(t, "mass_amu", mass_amu);
    check_positive(nu1_hz, "trap.nu1_hz");
    check_positive(mass_amu, "trap.mass_amu");
    cfg.trap.nu1 = 2.0 * M_PI * nu1_hz;
    cfg.trap.ion_mass = mass_amu * phys::amu;
    if (t.contains("wavelength_nm") && t.contains("wave_number"))
      throw ConfigError("config: give wavelength_nm or wave_number, not both");
    if (t.contains("wave_number")) {
      double k = 0;
      read_to(t, "wave_number", k);
      check_positive(k, "trap.wave_number");
      cfg.trap.wave_number = k;
    } else {
      double wl = 674.0;
      read_to(t, "wavelength_nm", wl);
      check_positive(wl, "trap.wavelength_nm");
      cfg.trap.wave_number = 2.0 * M_PI / (wl * 1e-9);
    }
    read_to(t, "spacing", cfg.trap.spacing);
    check_positive(cfg.trap.spacing, "trap.spacing");
    if (t.contains("curvature")) {
      std::vector<double> c = t.at("curvature").get<std::vector<double>>();
      cfg.trap.curvature = Eigen::Map<Eigen::VectorXd>(c.data(), long(c.size()));
    }
    if (cfg.trap.kind == TrapKind::custom) {
      if (!t.contains("custom_nu") || !t.contains("custom_O"))
        throw ConfigError("config: custom trap needs custom_nu and custom_O");
      CustomModes cm;
      std::vector<double> nu = t.at("custom_nu").get<std::vector<double>>();
      cm.nu = Eigen::Map<Eigen::VectorXd>(nu.data(), long(nu.size()));
      auto rows = t.at("custom_O").get<std::vector<std::vector<double>>>();
      cm.O.resize(long(rows.size()), long(rows.empty() ? 0 : rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (long(rows[r].size()) != cm.O.cols())
          throw ConfigError("config: custom_O rows must have equal length");
        for (std::size_t c = 0; c < rows[r].size(); ++c) cm.O(long(r), long(c)) = rows[r][c];
      }
      if (t.contains("custom_eta")) {
        std::vector<double> e = t.at("custom_eta").get<std::vector<double>>();
        cm.eta = Eigen::Map<Eigen::VectorXd>(e.data(), long(e.size()));
      }
      cfg.trap.custom = cm;
    }
  }

  if (j.contains("gate")) {
    const json& g = j.at("gate");
    require_keys(g, "gate",
                 {"T_in_com_periods", "margin", "target", "robust", "timing_order",
                  "reference_mode", "allow_speed_limit"});
    read_to(g, "T_in_com_periods", cfg.gate.T_in_com_periods);
    check_positive(cfg.gate.T_in_com_periods, "gate.T_in_com_periods");
    read_to(g, "margin", cfg.gate.margin);
    check_positive(cfg.gate.margin, "gate.margin");
    read_to(g, "timing_order", cfg.gate.timing_order);
    if (cfg.gate.timing_order < 1) throw ConfigError("config: gate.timing_order must be >= 1");
    read_to(g, "reference_mode", cfg.gate.reference_mode);
    read_to(g, "allow_speed_limit", cfg.gate.allow_speed_limit);
    read_to(g, "robust", cfg.gate.robust);
    for (const std::string& r : cfg.gate.robust)
      if (r != "timing" && r != "freq" && r != "optical")
        throw ConfigError("config: gate.robust entries must be timing|freq|optical");
    if (g.contains("target")) {
      const json& tg = g.at("target");
      require_keys(tg, "gate.target", {"kind", "phi", "extra", "stagger", "custom"});
      read_to(tg, "kind", cfg.gate.target.kind);
      read_to(tg, "phi", cfg.gate.target.phi);
      read_to(tg, "extra", cfg.gate.target.extra);
      read_to(tg, "stagger", cfg.gate.target.stagger);
      read_to(tg, "custom", cfg.gate.target.custom);
    }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    require_keys(s, "solver",
                 {"seed", "restarts", "max_iterations", "tol_quad", "tol_cc", "global_stage"});
    read_to(s, "seed", cfg.solver.seed);
    read_to(s, "restarts", cfg.solver.restarts);
    read_to(s, "max_iterations", cfg.solver.max_iterations);
    read_to(s, "tol_quad", cfg.solver.tol_quad);
    read_to(s, "tol_cc", cfg.solver.tol_cc);
    read_to(s, "global_stage", cfg.solver.global_stage);
    if (cfg.solver.restarts < 1) throw ConfigError("config: solver.restarts must be >= 1");
    check_positive(cfg.solver.tol_quad, "solver.tol_quad");
    check_positive(cfg.solver.tol_cc, "solver.tol_cc");
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    require_keys(v, "verify", {"fidelity_mode", "nbar", "oracle", "n_max"});
    read_to(v, "fidelity_mode", cfg.verify.fidelity_mode);
    if (cfg.verify.fidelity_mode != "exact" && cfg.verify.fidelity_mode != "approx" &&
        cfg.verify.fidelity_mode != "both")
      throw ConfigError("config: verify.fidelity_mode must be exact|approx|both");
    read_to(v, "nbar", cfg.verify.nbar);
    for (double nb : cfg.verify.nbar)
      if (nb < 0) throw ConfigError("config: verify.nbar entries must be >= 0");
    read_to(v, "oracle", cfg.verify.oracle);
    read_to(v, "n_max", cfg.verify.n_max);
    if (cfg.verify.n_max < 3) throw ConfigError("config: verify.n_max must be >= 3");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

/// Canonical re-serialization of the parsed config (used for hashing).
inline json config_to_json(const RunConfig& c) {
  json t;
  t["kind"] = c.trap.kind == TrapKind::harmonic     ? "harmonic"
              : c.trap.kind == TrapKind::equal_spaced ? "equal_spaced"
                                                      : "custom";
  t["nu1_hz"] = c.trap.nu1 / (2.0 * M_PI);
  t["mass_amu"] = c.trap.ion_mass / phys::amu;
  t["wave_number"] = c.trap.wave_number;
  t["spacing"] = c.trap.spacing;
  if (c.trap.curvature)
    t["curvature"] = std::vector<double>(c.trap.curvature->data(),
                                         c.trap.curvature->data() + c.trap.curvature->size());
  if (c.trap.custom) {
    t["custom_nu"] = std::vector<double>(c.trap.custom->nu.data(),
                                         c.trap.custom->nu.data() + c.trap.custom->nu.size());
    std::vector<std::vector<double>> rows;
    for (long r = 0; r < c.trap.custom->O.rows(); ++r) {
      std::vector<double> row;
      for (long cc = 0; cc < c.trap.custom->O.cols(); ++cc)
        row.push_back(c.trap.custom->O(r, cc));
      rows.push_back(row);
    }
    t["custom_O"] = rows;
  }
  json g;
  g["T_in_com_periods"] = c.gate.T_in_com_periods;
  g["margin"] = c.gate.margin;
  g["robust"] = c.gate.robust;
  g["timing_order"] = c.gate.timing_order;
  g["reference_mode"] = c.gate.reference_mode;
  g["allow_speed_limit"] = c.gate.allow_speed_limit;
  g["target"] = {{"kind", c.gate.target.kind},
                 {"phi", c.gate.target.phi},
                 {"extra", c.gate.target.extra},
                 {"stagger", c.gate.target.stagger},
                 {"custom", c.gate.target.custom}};
  json s;
  s["seed"] = c.solver.seed;
  s["restarts"] = c.solver.restarts;
  s["max_iterations"] = c.solver.max_iterations;
  s["tol_quad"] = c.solver.tol_quad;
  s["tol_cc"] = c.solver.tol_cc;
  s["global_stage"] = c.solver.global_stage;
  json v;
  v["fidelity_mode"] = c.verify.fidelity_mode;
  v["nbar"] = c.verify.nbar;
  v["oracle"] = c.verify.oracle;
  v["n_max"] = c.verify.n_max;
  return json{{"n_ions", c.n_ions}, {"trap", t}, {"gate", g}, {"solver", s}, {"verify", v}};
}

inline std::string config_hash(const RunConfig& c) {
  std::string s = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace iongate
