#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "qpr/kam.hpp"
#include "qpr/toeplitz.hpp"

namespace qpr {

// x-Fourier states indexed by j + j_max
struct Trajectory {
  int j_max = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;
  std::vector<double> s_list;
  std::vector<std::vector<double>> norms;  // norms[i][k] = ||states[i]||_{H^{s_list[k]}}
  double reality_defect = 0.0;            // max over records of max_j |u_{-j} - conj(u_j)|
};

struct EvolveOptions {
  double T = 1.0;
  double dt = 1e-2;
  int record_every = 1;
  std::vector<double> s_list{0.0};
  // dt max(|omega|_inf, m omega(j_max)) must stay below this
  double cfl_max = 1.0;
  double m = 1.0;
};

double hs_norm_x(const Eigen::VectorXcd& u, double s);
Eigen::VectorXcd state_from(const TorusFunction& u0, int j_max);

// du/dt = X(omega t) u by exponential midpoint steps; X given as a Toeplitz operator on the j window of u0
Trajectory evolve_full(const Eigen::VectorXcd& u0, const ToeplitzOperator& X, const std::vector<double>& omega,
                       const EvolveOptions& opt);

// phase -> (Phi(phi), Phi^{-1}(phi))
using PhaseMap = std::function<std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>(const std::vector<double>&)>;

// u(t) = Phi^{-1}(omega t) diag(e^{i d_j t}) Phi(0) u0
Trajectory evolve_reduced(const Eigen::VectorXcd& u0, const PhaseMap& Phi, const std::vector<double>& d,
                          const std::vector<double>& omega, const std::vector<double>& times,
                          const std::vector<double>& s_list);
Trajectory evolve_reduced(const Eigen::VectorXcd& u0, const Regularized& reg, const KamResult& kam,
                          const std::vector<double>& omega, const std::vector<double>& times,
                          const std::vector<double>& s_list);

struct StabilityReport {
  double c_lower = 0.0;  // min over t of ||u(t)||_s / ||u0||_s - 1
  double c_upper = 0.0;  // max of the same
  double c() const { return std::max(-c_lower, c_upper); }
};
StabilityReport norm_stability_report(const Trajectory& traj, double s);

// sup over common record times of ||a - b||_s / ||b||_s
double trajectory_discrepancy(const Trajectory& a, const Trajectory& b, double s);

}  // namespace qpr
