#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "qpr/lattice.hpp"

namespace qpr {

// u(phi, x) = sum u_{l j} e^{i(l.phi + j x)} on the truncated lattice.
struct TorusFunction {
  Lattice lat;
  Eigen::VectorXcd c;
  bool zero_mean = false;

  TorusFunction() = default;
  explicit TorusFunction(const Lattice& l) : lat(l), c(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(l.size()))) {}

  cd& at(std::size_t li, int j) { return c[static_cast<Eigen::Index>(li * lat.n_j() + lat.jj(j))]; }
  cd at(std::size_t li, int j) const { return c[static_cast<Eigen::Index>(li * lat.n_j() + lat.jj(j))]; }
  cd mean() const { return at(lat.zero(), 0); }

  // max |u_{-l,-j} - conj(u_{l,j})|
  double reality_defect() const;
  void enforce_reality();
  // copy onto another truncation (zero padding or cut)
  TorusFunction resized(const Lattice& other) const;
};

// one real mode amp*cos(l.phi + j x + phase)
struct Mode {
  std::vector<int> ell;
  int j = 0;
  double amplitude = 0.0;
  double phase = 0.0;
};
TorusFunction from_modes(const Lattice& lat, const std::vector<Mode>& modes);

struct SobolevIndex {
  double s = 0.0;
  static int s0(int nu) { return nu / 2 + 3; }
};

struct LipFamily {
  std::vector<std::vector<double>> omegas;
  std::vector<TorusFunction> values;
  double gamma = 0.0;
};

double sobolev_norm(const TorusFunction& u, double s);
double lip_norm(const LipFamily& f, double s);

// collocation grid sizes used by products and compositions
int phi_grid(const Lattice& lat);
int x_grid(const Lattice& lat);

// values on the (M^nu x Nx) grid, x fastest
std::vector<cd> to_grid(const TorusFunction& u, int M, int Nx);
TorusFunction from_grid(std::vector<cd> values, const Lattice& lat, int M, int Nx);
// x-coefficients of u at each phi node: layout [node][jj]
std::vector<cd> phi_nodes(const TorusFunction& u, int M);

TorusFunction pointwise_product(const TorusFunction& u, const TorusFunction& v);
TorusFunction dx(const TorusFunction& u);
TorusFunction omega_dphi(const TorusFunction& u, const std::vector<double>& omega);
TorusFunction operator+(const TorusFunction& a, const TorusFunction& b);
TorusFunction operator-(const TorusFunction& a, const TorusFunction& b);
TorusFunction operator*(double s, const TorusFunction& a);
double sup_norm(const TorusFunction& u);
// sup over the grid of |d_x u|
double sup_dx(const TorusFunction& u);

// u(phi, x + tau*beta(phi, x))
TorusFunction compose_diffeo(const TorusFunction& u, const TorusFunction& beta, double tau);

struct InverseDiffeo {
  TorusFunction beta_tilde;
  double residual = 0.0;
  int iterations = 0;
};
// beta_tilde with (x + beta) + beta_tilde(x + beta) = x
InverseDiffeo invert_diffeo(const TorusFunction& beta, double tol = 1e-13, int max_iter = 200);

// evaluate sum_j c[j] e^{i j y}, c indexed by jj in [0, 2J]
cd eval_series(const cd* c, int j_max, double y);

void write_csv(std::ostream& os, const TorusFunction& u);

}  // namespace qpr
