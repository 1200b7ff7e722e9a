#pragma once

#include <map>
#include <optional>

#include "qpr/straightening.hpp"
#include "qpr/symbol.hpp"
#include "qpr/toeplitz.hpp"

namespace qpr {

// J o (1 + a) - Q on the operator lattice
ToeplitzOperator dp_operator(const TorusFunction& a, const ToeplitzOperator& Q, const Lattice& op);
// J o <D>^{-1} c <D>^{-1}: a Hamiltonian perturbation of order -1
ToeplitzOperator order_minus_one_perturbation(const TorusFunction& c, const Lattice& op);

// (A^tau h)(x) = (1 + tau beta_x) h(x + tau beta)
ToeplitzOperator build_A_tau(const TorusFunction& beta, double tau, const Lattice& op);
// (A^tau)^{-1}, built from the inverse diffeomorphism of x + tau beta
ToeplitzOperator build_A_tau_inverse(const TorusFunction& beta, double tau, const Lattice& op);

struct FlowOptions {
  int n_steps = 8;
  int M = 0;  // phi grid, 0 starts from op_grid and refines until the spectrum of Psi is resolved
  double symplectic_tol = 1e-9;
  double tail_tol = 1e-12;
  std::size_t max_nodes = 1u << 13;
};

struct FlowResult {
  ToeplitzOperator Psi;
  ToeplitzOperator Psi_inv;
  OpGrid Psi_grid;
  OpGrid Psi_inv_grid;
  // max over phi nodes of |Psi^T S Psi - S| on j, j' != 0
  double symplectic_defect = 0.0;
  // relative size of the outer third of the phi spectrum of Psi on the final grid
  double grid_tail = 0.0;
};

// time-1 map of d_tau Psi = (J o b(tau)) Psi, b = beta / (1 + tau beta_x), midpoint-exponential substeps
FlowResult flow_Psi(const TorusFunction& beta, const Lattice& op, const FlowOptions& opt = {});
// Psi(phi) and Psi(phi)^{-1} at a single angle
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> flow_at(const TorusFunction& beta, const Lattice& op,
                                                      const std::vector<double>& phi, const FlowOptions& opt = {});

struct FlowFactorization {
  ToeplitzOperator A1;
  ToeplitzOperator A1_inv;
  ToeplitzOperator C;  // (A^1)^{-1} Psi
  Symbol theta;        // order -1 fit of C - I
  double theta_fit_residual = 0.0;
  double half_weighted_norm = 0.0;  // majorant of <D>^{1/2}(C - I)<D>^{1/2} at s = 0
  double residual_norm = 0.0;       // majorant of <D>(C - I - Op(theta)) at s = 0
};
FlowFactorization factorize_flow(const ToeplitzOperator& Psi, const TorusFunction& beta);

// symbol sum_p c_p(phi, x) (i xi)^p; negative powers vanish at xi = 0
struct PolySymbol {
  std::map<int, TorusFunction> terms;
  int order() const { return terms.empty() ? 0 : terms.rbegin()->first; }
  Symbol to_symbol(int xi_window) const;
};

struct EgorovOptions {
  int cheb_nodes = 16;  // Chebyshev-Lobatto time nodes; forcing integrals use the interpolant
  int j_out = -1;  // x-truncation of the output coefficients, default that of w
};

struct EgorovSymbols {
  PolySymbol q;  // q_m plus corrections q_{m-1}, ..., q_{m-rho+1}
  int rho = 0;
};

// symbol of A^1 Op(w) (A^1)^{-1} up to order m - rho
EgorovSymbols egorov_transport(const PolySymbol& w, const TorusFunction& beta, int rho, const EgorovOptions& opt = {});

struct RegularizeOptions {
  FlowOptions flow;
  StraightenOptions straighten;
  double transport_tol = 1e-8;
  double structure_tol = 1e-9;
  bool diagnostics = false;
  int rho = 3;
};

struct Regularized {
  double m = 1.0;
  StraighteningResult straight;
  ToeplitzOperator X;  // J o (1+a) - Q restricted to zero-mean functions
  ToeplitzOperator Phi1;
  ToeplitzOperator Phi1_inv;
  FlowResult flow;  // Psi on its resolved phi grid
  FlowOptions flow_options;
  ToeplitzOperator R;  // Phi1 L Phi1^{-1} = omega.d_phi - m J + R
  double transport_defect = 0.0;
  double order0_defect = 0.0;
  double symplectic_defect = 0.0;
  StructureReport structure;
  Symbol r_symbol;
  double r_fit_residual = 0.0;
  double half_weighted_norm = 0.0;
  std::optional<SmoothingDiagnostics> smoothing;
};

Regularized regularize(const TorusFunction& a, const ToeplitzOperator& Q, const FrequencyConfig& freq,
                       const Lattice& op, const RegularizeOptions& opt = {});

// entries times <j>^{pl} <j'>^{pr}
ToeplitzOperator weight_j(const ToeplitzOperator& A, double pl, double pr);
// order -1 fit t_{sign xi}(l, k) / (i xi) of the entries on the band j' in [lo, hi]
Symbol fit_order_minus_one(const ToeplitzOperator& A, int k_max, int lo, int hi, double* rel_residual = nullptr);
// |c0| of the fit A_j^j(0)/i ~ c0 + c1/j + c2/j^2 + c3/j^3 over j in [lo, hi]
double order_zero_defect(const ToeplitzOperator& A, int lo, int hi);

}  // namespace qpr
