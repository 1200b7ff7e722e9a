#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpr/kam.hpp"
#include "qpr/measure.hpp"
#include "qpr/straightening.hpp"
#include "qpr/torus_function.hpp"

namespace qpr {

struct XMode {
  int j = 0;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct OmegaScan {
  std::vector<double> from, to;
  int count = 0;  // 0: no scan
};

struct RunConfig {
  int schema_version = 1;

  FrequencyConfig freq;
  std::string omega_preset;  // "golden" or empty when omega was given explicitly
  OmegaScan scan;

  double epsilon = 1e-3;
  std::vector<Mode> a_modes;  // amplitudes are multiplied by epsilon
  std::vector<Mode> q_modes;  // c of the order -1 perturbation J o <D>^{-1} c <D>^{-1}, times epsilon

  int j_max = 16;
  int l_max = 6;
  int xi_window = 32;
  int rho = 3;
  std::vector<double> s_list;  // default {s0}
  int flow_steps = 8;

  StraightenOptions straighten;

  int N0 = 4;
  int k_max = 6;
  double kam_floor = 1e-12;
  double series_tol = 1e-14;
  double proxy_max = 0.5;

  double T = 100.0;
  double dt = 0.01;
  double evo_s = -1.0;  // default s0 + 2
  std::vector<XMode> u0_modes;
  int record_every = 100;

  std::vector<double> gammas{0.1, 0.05, 0.025};
  MeasureOptions measure;

  std::uint64_t seed = 1;

  int s0() const { return SobolevIndex::s0(freq.nu); }
  double evolution_s() const { return evo_s >= 0.0 ? evo_s : s0() + 2.0; }
  Lattice lattice() const { return Lattice(freq.nu, l_max, j_max); }
  TorusFunction a() const;
  TorusFunction c() const;
  KamParams kam_params() const;
  // throws ConfigError naming the field
  void validate() const;
};

// omega = L (golden ratio, sqrt 3, pi/2) for the first nu entries, nu <= 3
std::vector<double> golden_omega(int nu, double L);

RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);
// canonical YAML dump of the parsed config
std::string dump_config(const RunConfig& cfg);
// FNV-1a of the canonical dump, hex
std::string config_hash(const RunConfig& cfg);

}  // namespace qpr
