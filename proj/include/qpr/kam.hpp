#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpr/egorov.hpp"
#include "qpr/straightening.hpp"
#include "qpr/toeplitz.hpp"

namespace qpr {

struct KamParams {
  int nu = 1;
  double gamma = 0.1;
  double tau = 8.0;
  double b0 = 54.0;
  double a_exp = 52.0;
  double tau1 = 18.0;
  int N0 = 4;
  int k_max = 6;
  double floor = 1e-12;       // stop once the off-diagonal majorant norm is below this
  double series_tol = 1e-14;  // Lie and exponential series stop at this term norm
  int series_max = 40;
  double proxy_max = 0.5;     // enforced smallness: majorant of the generator below this
  bool overridden = false;

  // tau = 2 nu + 6, b0 = 6 tau + 6, a = 6 tau + 4, tau1 = 2 tau + 2
  static KamParams standard(int nu, double gamma, int N0 = 4, int k_max = 6);
  // N_k = round(N0^{(3/2)^k}), N_{-1} = 1
  int N(int k) const;
  void validate() const;
};

struct SpectralData {
  double m = 1.0;
  int j_max = 0;
  std::vector<double> r;  // indexed by j + j_max, r[j_max] unused
  std::vector<std::vector<double>> history;
  double d(int j) const { return m * omega_dp(j) + r[j + j_max]; }
  double r_of(int j) const { return r[j + j_max]; }
  double oddness_defect() const;   // max |r_j + r_{-j}|
  double weighted_sup() const;     // sup <j>|r_j|
};

// |omega.l + d_j - d_j'| > gamma^{3/2} <l>^{-tau} for (l, j, j') != (0, j, j), |l|_inf <= N, j, j' != 0.
// Pairs with |omega(j) - omega(j')| > 8|omega| |l| are pruned.
ResonanceScan melnikov_second(const std::vector<double>& omega, const SpectralData& d, double gamma, double tau,
                              int N, bool prune = true);

// A(l; j, j') = P(l; j, j') / (i(omega.l + e_j - e_j')) for |l|_1 <= N, off the (0, j, j) diagonal,
// for the operator omega.d_phi + diag(i e_j) + P. `identity_residual` receives the majorant (s)
// of omega.d_phi A + [D, A] - (Pi_N P - [P]).
ToeplitzOperator homological_solve(const ToeplitzOperator& P, const std::vector<double>& omega,
                                   const std::vector<double>& e, double eta, double tau, int N,
                                   double* identity_residual = nullptr, double s = 0.0);

struct KamStep {
  std::vector<double> e_plus;
  ToeplitzOperator P_plus;
  ToeplitzOperator A;  // Q = exp(A)
  double identity_residual = 0.0;
  double generator_norm = 0.0;
  int series_terms = 0;
  double structure_defect = 0.0;
};

// one conjugation of omega.d_phi + diag(i e_j) + P by exp(A)
KamStep kam_step(const std::vector<double>& e, const ToeplitzOperator& P, const std::vector<double>& omega,
                 const KamParams& params, int N, double s = 0.0);

// pointwise exp(A(phi)) on the grid
OpGrid exp_grid(const ToeplitzOperator& A, int M, double sign = 1.0);

struct KamTraceEntry {
  int k = 0;
  int N = 0;
  double offdiag_norm = 0.0;  // majorant (s0) of P_k before the step
  double melnikov_margin_min = 0.0;
  double structure_defect = 0.0;
  double identity_residual = 0.0;
  double generator_norm = 0.0;
  double smallness = 0.0;  // gamma^{-3/2} N^{2 tau + 2} |P|, reported only
  int series_terms = 0;
};

struct KamResult {
  bool excluded = false;
  ResonanceScan violation;  // set when excluded
  SpectralData spectral;
  std::vector<ToeplitzOperator> generators;  // A_0, A_1, ... with Phi2 = exp(A_K) ... exp(A_0)
  ToeplitzOperator Phi2;
  ToeplitzOperator Phi2_inv;
  ToeplitzOperator P_final;
  std::vector<KamTraceEntry> trace;
  double final_norm = 0.0;
  double decay_slope = 0.0;  // fitted d log|P_k| / d log N_{k-1}
  std::string stop_reason;
};

// iterate from omega.d_phi - m J + R, absorbing diagonal averages into the eigenvalues
KamResult kam_iterate(const ToeplitzOperator& R, double m, const std::vector<double>& omega, const KamParams& params);

struct FullDiagonalizer {
  ToeplitzOperator Phi;
  ToeplitzOperator Phi_inv;
  double residual_full = 0.0;      // majorant (s0) of Phi L Phi^{-1} - (omega.d_phi - D)
  double residual_interior = 0.0;  // same on |l|_inf <= l_max/2, |j| <= j_max/2
  int grid = 0;
};

// Phi = Phi2 o Phi1; residual measured node by node on the flow grid
FullDiagonalizer assemble_full_diagonalizer(const Regularized& reg, const KamResult& kam,
                                            const std::vector<double>& omega);

// Phi(phi) and Phi(phi)^{-1} from the stage generators, no l-truncation
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> diagonalizer_at(const Regularized& reg, const KamResult& kam,
                                                              const std::vector<double>& phi);

}  // namespace qpr
