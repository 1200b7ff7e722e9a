#include "qpr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qpr/errors.hpp"

namespace qpr {

std::vector<double> golden_omega(int nu, double L) {
  static const double base[] = {(1.0 + std::sqrt(5.0)) / 2.0, std::sqrt(3.0), M_PI / 2.0};
  if (nu < 1 || nu > 3) throw ConfigError("frequency.omega: the golden preset is defined for nu <= 3");
  std::vector<double> w(base, base + nu);
  for (double& x : w) x *= L;
  return w;
}

TorusFunction RunConfig::a() const {
  std::vector<Mode> m = a_modes;
  for (auto& x : m) x.amplitude *= epsilon;
  return from_modes(lattice(), m);
}

TorusFunction RunConfig::c() const {
  std::vector<Mode> m = q_modes;
  for (auto& x : m) x.amplitude *= epsilon;
  return from_modes(lattice(), m);
}

KamParams RunConfig::kam_params() const {
  KamParams p = KamParams::standard(freq.nu, freq.gamma, N0, k_max);
  p.tau = freq.tau;
  p.overridden = freq.tau_override;
  p.floor = kam_floor;
  p.series_tol = series_tol;
  p.proxy_max = proxy_max;
  return p;
}

void RunConfig::validate() const {
  if (schema_version != 1) throw ConfigError("schema_version: only version 1 is supported");
  freq.validate();
  if (static_cast<int>(freq.omega.size()) != freq.nu) throw ConfigError("frequency.omega: needs nu entries");
  auto modes_ok = [&](const std::vector<Mode>& ms, const char* path) {
    for (const auto& m : ms) {
      if (static_cast<int>(m.ell.size()) != freq.nu)
        throw ConfigError(std::string(path) + ".ell: needs nu entries");
      for (int l : m.ell)
        if (std::abs(l) > l_max) throw ConfigError(std::string(path) + ".ell: outside |l| <= truncation.l_max");
      if (std::abs(m.j) > j_max) throw ConfigError(std::string(path) + ".j: outside |j| <= truncation.j_max");
    }
  };
  modes_ok(a_modes, "problem.a_modes");
  modes_ok(q_modes, "problem.q_modes");
  if (!(epsilon >= 0.0)) throw ConfigError("problem.epsilon: must be nonnegative");
  if (j_max < 1) throw ConfigError("truncation.j_max: must be >= 1");
  if (l_max < 0) throw ConfigError("truncation.l_max: must be >= 0");
  if (xi_window < 1) throw ConfigError("truncation.xi_window: must be >= 1");
  if (rho < 1) throw ConfigError("truncation.rho: must be >= 1");
  if (flow_steps < 1) throw ConfigError("truncation.flow_steps: must be >= 1");
  if (!(straighten.tol > 0.0)) throw ConfigError("straighten.tol: must be positive");
  if (straighten.max_iter < 1) throw ConfigError("straighten.max_iter: must be >= 1");
  if (N0 < 1) throw ConfigError("kam.N0: must be >= 1");
  if (k_max < 0) throw ConfigError("kam.k_max: must be >= 0");
  if (!(kam_floor > 0.0)) throw ConfigError("kam.floor: must be positive");
  if (!(series_tol > 0.0)) throw ConfigError("kam.series_tol: must be positive");
  if (!(proxy_max > 0.0)) throw ConfigError("kam.proxy_max: must be positive");
  if (!(T >= 0.0)) throw ConfigError("evolution.T: must be nonnegative");
  if (!(dt > 0.0)) throw ConfigError("evolution.dt: must be positive");
  if (record_every < 1) throw ConfigError("evolution.record_every: must be >= 1");
  for (const auto& u : u0_modes)
    if (u.j == 0 || std::abs(u.j) > j_max) throw ConfigError("evolution.u0_modes.j: must satisfy 0 < |j| <= j_max");
  for (double g : gammas)
    if (!(g > 0.0)) throw ConfigError("measure.gammas: must be positive");
  if (measure.lines < 1) throw ConfigError("measure.lines: must be >= 1");
  if (measure.cutoff_R < 0 || measure.cutoff_Q < 0 || measure.cutoff_zero < 0) throw ConfigError("measure.cutoff: must be >= 0");
  if (scan.count > 0 && (static_cast<int>(scan.from.size()) != freq.nu || static_cast<int>(scan.to.size()) != freq.nu))
    throw ConfigError("frequency.scan: from and to need nu entries");
  kam_params().validate();
}

namespace {

void check_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError(path + ": expected a map");
  for (const auto& kv : n) {
    auto k = kv.first.as<std::string>();
    if (!allowed.count(k)) throw ConfigError((path.empty() ? k : path + "." + k) + ": unknown key");
  }
}

template <class T>
void get(const YAML::Node& n, const std::string& path, const char* key, T& out) {
  if (!n[key]) return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

std::vector<Mode> modes(const YAML::Node& n, const std::string& path) {
  std::vector<Mode> out;
  if (!n) return out;
  if (!n.IsSequence()) throw ConfigError(path + ": expected a list");
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    check_keys(n[i], p, {"ell", "j", "amplitude", "phase"});
    Mode m;
    get(n[i], p, "ell", m.ell);
    get(n[i], p, "j", m.j);
    get(n[i], p, "amplitude", m.amplitude);
    get(n[i], p, "phase", m.phase);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("config: empty document");
  check_keys(root, "", {"schema_version", "seed", "frequency", "problem", "truncation", "straighten", "kam",
                        "evolution", "measure"});
  RunConfig c;
  if (!root["schema_version"]) throw ConfigError("schema_version: missing");
  get(root, "", "schema_version", c.schema_version);
  if (c.schema_version != 1) throw ConfigError("schema_version: only version 1 is supported");
  get(root, "", "seed", c.seed);

  bool tau_given = false;
  if (auto f = root["frequency"]) {
    check_keys(f, "frequency", {"nu", "L", "gamma", "tau", "tau_override", "omega", "scan"});
    get(f, "frequency", "nu", c.freq.nu);
    get(f, "frequency", "L", c.freq.L);
    get(f, "frequency", "gamma", c.freq.gamma);
    tau_given = static_cast<bool>(f["tau"]);
    get(f, "frequency", "tau", c.freq.tau);
    get(f, "frequency", "tau_override", c.freq.tau_override);
    if (auto w = f["omega"]) {
      if (w.IsScalar()) {
        c.omega_preset = w.as<std::string>();
        if (c.omega_preset != "golden") throw ConfigError("frequency.omega: expected a list or \"golden\"");
      } else {
        get(f, "frequency", "omega", c.freq.omega);
      }
    }
    if (auto s = f["scan"]) {
      check_keys(s, "frequency.scan", {"from", "to", "count"});
      get(s, "frequency.scan", "from", c.scan.from);
      get(s, "frequency.scan", "to", c.scan.to);
      get(s, "frequency.scan", "count", c.scan.count);
    }
  }
  if (c.freq.nu < 1) throw ConfigError("frequency.nu: must be >= 1");
  if (!tau_given) c.freq.tau = 2.0 * c.freq.nu + 6.0;
  if (c.freq.omega.empty()) {
    c.omega_preset = "golden";
    c.freq.omega = golden_omega(c.freq.nu, c.freq.L);
  }

  if (auto p = root["problem"]) {
    check_keys(p, "problem", {"epsilon", "a_modes", "q_modes"});
    get(p, "problem", "epsilon", c.epsilon);
    c.a_modes = modes(p["a_modes"], "problem.a_modes");
    c.q_modes = modes(p["q_modes"], "problem.q_modes");
  }
  if (auto t = root["truncation"]) {
    check_keys(t, "truncation", {"j_max", "l_max", "xi_window", "rho", "s_list", "flow_steps"});
    get(t, "truncation", "j_max", c.j_max);
    get(t, "truncation", "l_max", c.l_max);
    get(t, "truncation", "xi_window", c.xi_window);
    get(t, "truncation", "rho", c.rho);
    get(t, "truncation", "s_list", c.s_list);
    get(t, "truncation", "flow_steps", c.flow_steps);
  }
  if (c.s_list.empty()) c.s_list = {static_cast<double>(c.s0())};
  if (auto s = root["straighten"]) {
    check_keys(s, "straighten", {"tol", "max_iter"});
    get(s, "straighten", "tol", c.straighten.tol);
    get(s, "straighten", "max_iter", c.straighten.max_iter);
  }
  if (auto k = root["kam"]) {
    check_keys(k, "kam", {"N0", "k_max", "floor", "series_tol", "proxy_max"});
    get(k, "kam", "N0", c.N0);
    get(k, "kam", "k_max", c.k_max);
    get(k, "kam", "floor", c.kam_floor);
    get(k, "kam", "series_tol", c.series_tol);
    get(k, "kam", "proxy_max", c.proxy_max);
  }
  if (auto e = root["evolution"]) {
    check_keys(e, "evolution", {"T", "dt", "s", "u0_modes", "record_every"});
    get(e, "evolution", "T", c.T);
    get(e, "evolution", "dt", c.dt);
    get(e, "evolution", "s", c.evo_s);
    get(e, "evolution", "record_every", c.record_every);
    if (auto u = e["u0_modes"]) {
      if (!u.IsSequence()) throw ConfigError("evolution.u0_modes: expected a list");
      for (std::size_t i = 0; i < u.size(); ++i) {
        const std::string p = "evolution.u0_modes[" + std::to_string(i) + "]";
        check_keys(u[i], p, {"j", "amplitude", "phase"});
        XMode m;
        get(u[i], p, "j", m.j);
        get(u[i], p, "amplitude", m.amplitude);
        get(u[i], p, "phase", m.phase);
        c.u0_modes.push_back(m);
      }
    }
  }
  if (c.u0_modes.empty()) c.u0_modes = {{1, 1.0, 0.0}, {2, 0.5, -M_PI / 2}};
  c.measure.tau = c.freq.tau;
  c.measure.tau1 = c.freq.nu + 2.0;
  if (auto m = root["measure"]) {
    check_keys(m, "measure", {"gammas", "cutoff_R", "cutoff_Q", "cutoff_zero", "j_cutoff", "j_scale", "lines", "tau1", "C_incl",
                              "prune", "tail_tol"});
    get(m, "measure", "gammas", c.gammas);
    get(m, "measure", "cutoff_R", c.measure.cutoff_R);
    get(m, "measure", "cutoff_Q", c.measure.cutoff_Q);
    get(m, "measure", "cutoff_zero", c.measure.cutoff_zero);
    get(m, "measure", "j_cutoff", c.measure.j_cutoff);
    get(m, "measure", "j_scale", c.measure.j_scale);
    get(m, "measure", "lines", c.measure.lines);
    get(m, "measure", "tau1", c.measure.tau1);
    get(m, "measure", "C_incl", c.measure.C_incl);
    get(m, "measure", "prune", c.measure.prune);
    get(m, "measure", "tail_tol", c.measure.tail_tol);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  auto mode_list = [&](const std::vector<Mode>& ms) {
    e << YAML::BeginSeq;
    for (const auto& m : ms)
      e << YAML::Flow << YAML::BeginMap << YAML::Key << "ell" << YAML::Value << YAML::Flow << m.ell << YAML::Key
        << "j" << YAML::Value << m.j << YAML::Key << "amplitude" << YAML::Value << m.amplitude << YAML::Key << "phase"
        << YAML::Value << m.phase << YAML::EndMap;
    e << YAML::EndSeq;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "schema_version" << YAML::Value << c.schema_version;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "frequency" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "nu" << YAML::Value << c.freq.nu << YAML::Key << "L" << YAML::Value << c.freq.L;
  e << YAML::Key << "gamma" << YAML::Value << c.freq.gamma << YAML::Key << "tau" << YAML::Value << c.freq.tau;
  e << YAML::Key << "tau_override" << YAML::Value << c.freq.tau_override;
  e << YAML::Key << "omega" << YAML::Value << YAML::Flow << c.freq.omega;
  if (c.scan.count > 0)
    e << YAML::Key << "scan" << YAML::Value << YAML::BeginMap << YAML::Key << "from" << YAML::Value << YAML::Flow
      << c.scan.from << YAML::Key << "to" << YAML::Value << YAML::Flow << c.scan.to << YAML::Key << "count"
      << YAML::Value << c.scan.count << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  e << YAML::Key << "a_modes" << YAML::Value;
  mode_list(c.a_modes);
  e << YAML::Key << "q_modes" << YAML::Value;
  mode_list(c.q_modes);
  e << YAML::EndMap;
  e << YAML::Key << "truncation" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "j_max" << YAML::Value << c.j_max << YAML::Key << "l_max" << YAML::Value << c.l_max;
  e << YAML::Key << "xi_window" << YAML::Value << c.xi_window << YAML::Key << "rho" << YAML::Value << c.rho;
  e << YAML::Key << "s_list" << YAML::Value << YAML::Flow << c.s_list;
  e << YAML::Key << "flow_steps" << YAML::Value << c.flow_steps << YAML::EndMap;
  e << YAML::Key << "straighten" << YAML::Value << YAML::BeginMap << YAML::Key << "tol" << YAML::Value
    << c.straighten.tol << YAML::Key << "max_iter" << YAML::Value << c.straighten.max_iter << YAML::EndMap;
  e << YAML::Key << "kam" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "N0" << YAML::Value << c.N0 << YAML::Key << "k_max" << YAML::Value << c.k_max;
  e << YAML::Key << "floor" << YAML::Value << c.kam_floor << YAML::Key << "series_tol" << YAML::Value << c.series_tol;
  e << YAML::Key << "proxy_max" << YAML::Value << c.proxy_max << YAML::EndMap;
  e << YAML::Key << "evolution" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "T" << YAML::Value << c.T << YAML::Key << "dt" << YAML::Value << c.dt;
  e << YAML::Key << "s" << YAML::Value << c.evolution_s() << YAML::Key << "record_every" << YAML::Value
    << c.record_every;
  e << YAML::Key << "u0_modes" << YAML::Value << YAML::BeginSeq;
  for (const auto& u : c.u0_modes)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "j" << YAML::Value << u.j << YAML::Key << "amplitude"
      << YAML::Value << u.amplitude << YAML::Key << "phase" << YAML::Value << u.phase << YAML::EndMap;
  e << YAML::EndSeq << YAML::EndMap;
  const auto& m = c.measure;
  e << YAML::Key << "measure" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "gammas" << YAML::Value << YAML::Flow << c.gammas;
  e << YAML::Key << "cutoff_R" << YAML::Value << m.cutoff_R << YAML::Key << "cutoff_Q" << YAML::Value << m.cutoff_Q
    << YAML::Key << "cutoff_zero" << YAML::Value << m.cutoff_zero;
  e << YAML::Key << "j_cutoff" << YAML::Value << m.j_cutoff << YAML::Key << "j_scale" << YAML::Value << m.j_scale;
  e << YAML::Key << "lines" << YAML::Value << m.lines << YAML::Key << "tau1" << YAML::Value << m.tau1;
  e << YAML::Key << "C_incl" << YAML::Value << m.C_incl << YAML::Key << "prune" << YAML::Value << m.prune;
  e << YAML::Key << "tail_tol" << YAML::Value << m.tail_tol << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qpr
