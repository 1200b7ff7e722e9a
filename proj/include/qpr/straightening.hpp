#pragma once

#include <vector>

#include "qpr/torus_function.hpp"

namespace qpr {

struct FrequencyConfig {
  int nu = 1;
  double L = 1.0;
  double gamma = 0.1;
  double tau = 8.0;
  std::vector<double> omega;
  bool tau_override = false;

  // throws ConfigError on violated invariants
  void validate() const;
};

// outcome of a non-resonance scan, with the worst index met
struct ResonanceScan {
  bool ok = true;
  std::vector<int> ell;
  int j = 0;
  int jp = 0;
  double divisor = 0.0;
  double bound = 0.0;
  // min over scanned indices of |divisor| / bound
  double margin = 0.0;
  explicit operator bool() const { return ok; }
};

// |omega.l| >= 2 gamma <l>^{-nu} for 0 < |l|_inf <= ell_max
ResonanceScan diophantine_zeroth(const std::vector<double>& omega, double gamma, int ell_max);
// |omega.l - m j| >= 2 gamma <l>^{-tau}, only |j| <= 4|omega||l|/m can fail
ResonanceScan melnikov_first(const std::vector<double>& omega, double m, double gamma, double tau, int ell_max,
                             int j_max);

// beta_hat(l,j) = a_hat(l,j) / (i(omega.l - m j)) for j != 0; the j = 0 slab is left at zero
TorusFunction transport_homological_solve(const TorusFunction& a, const std::vector<double>& omega, double m,
                                          double gamma, double tau);

struct StraightenOptions {
  double tol = 1e-13;
  int max_iter = 30;
};

struct StraighteningResult {
  double m = 1.0;
  TorusFunction beta;        // x + beta inverts x + beta_tilde
  TorusFunction beta_tilde;  // straightening map x -> x + beta_tilde
  double residual = 0.0;     // sup |omega.d beta_t - (1+a)(1+d_x beta_t) + m|
  int iterations = 0;
  std::vector<double> history;  // sup |a_n - <a_n>| per iteration
  double inverse_residual = 0.0;
};

StraighteningResult straighten_iterate(const TorusFunction& a, const FrequencyConfig& freq,
                                       const StraightenOptions& opt = {});

// grid sup of omega.d_phi bt - (1+a)(1+bt_x) + m
double straightening_residual(const TorusFunction& a, const TorusFunction& beta_tilde, const std::vector<double>& omega,
                              double m);

}  // namespace qpr
