#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qpr/lattice.hpp"
#include "qpr/torus_function.hpp"

namespace qpr {

// A_j^{j'}(l): one (2J+1)x(2J+1) column-major slab per l in the box.
class ToeplitzOperator {
public:
  Lattice lat;
  std::vector<cd> data;
  bool is_real = false;
  bool is_hamiltonian = false;

  ToeplitzOperator() = default;
  explicit ToeplitzOperator(const Lattice& l);

  int n() const { return lat.n_j(); }
  std::size_t slab_size() const { return static_cast<std::size_t>(n()) * n(); }
  Eigen::Map<Eigen::MatrixXcd> slab(std::size_t li) { return {data.data() + li * slab_size(), n(), n()}; }
  Eigen::Map<const Eigen::MatrixXcd> slab(std::size_t li) const {
    return {data.data() + li * slab_size(), n(), n()};
  }
  cd& at(std::size_t li, int j, int jp) { return data[li * slab_size() + lat.jj(j) + static_cast<std::size_t>(lat.jj(jp)) * n()]; }
  cd at(std::size_t li, int j, int jp) const {
    return data[li * slab_size() + lat.jj(j) + static_cast<std::size_t>(lat.jj(jp)) * n()];
  }

  static ToeplitzOperator identity(const Lattice& l);
  static ToeplitzOperator diagonal(const Lattice& l, const std::function<cd(int)>& f);
  // multiplication by the function a
  static ToeplitzOperator multiplication(const TorusFunction& a);

  ToeplitzOperator& operator+=(const ToeplitzOperator& o);
  ToeplitzOperator& operator-=(const ToeplitzOperator& o);
  ToeplitzOperator& operator*=(cd s);
  double max_abs() const;
  // zero the j = 0 row and column (restriction to zero-mean functions)
  void drop_zero_mode();
  ToeplitzOperator resized(const Lattice& other) const;
};

ToeplitzOperator operator+(ToeplitzOperator a, const ToeplitzOperator& b);
ToeplitzOperator operator-(ToeplitzOperator a, const ToeplitzOperator& b);
ToeplitzOperator operator*(cd s, ToeplitzOperator a);

// Values A(phi_n) on the phi grid (M per axis).
struct OpGrid {
  Lattice lat;
  int M = 0;
  std::size_t nodes = 0;
  std::vector<cd> data;
  int n() const { return lat.n_j(); }
  Eigen::Map<Eigen::MatrixXcd> node(std::size_t k) {
    return {data.data() + k * static_cast<std::size_t>(n()) * n(), n(), n()};
  }
  Eigen::Map<const Eigen::MatrixXcd> node(std::size_t k) const {
    return {data.data() + k * static_cast<std::size_t>(n()) * n(), n(), n()};
  }
  // phi vector of node k
  std::vector<double> phi(std::size_t k) const;
};

// grid size on which binary products are exact on the box
int op_grid(const Lattice& lat);
OpGrid to_grid(const ToeplitzOperator& A, int M);
OpGrid empty_grid(const Lattice& lat, int M);
ToeplitzOperator from_grid(OpGrid g);
// pointwise product of grids
OpGrid grid_product(const OpGrid& a, const OpGrid& b);

TorusFunction apply(const ToeplitzOperator& A, const TorusFunction& u);
// same, reusing a grid from to_grid(A, op_grid(A.lat))
TorusFunction apply(const OpGrid& g, const TorusFunction& u);
ToeplitzOperator compose(const ToeplitzOperator& A, const ToeplitzOperator& B);
ToeplitzOperator commutator(const ToeplitzOperator& A, const ToeplitzOperator& B);
// omega . d_phi acting on an operator: entries times i omega.l
ToeplitzOperator omega_dphi(const ToeplitzOperator& A, const std::vector<double>& omega);
// omega.d_phi of the trigonometric interpolant of the grid values, back on the same grid
OpGrid omega_dphi(const OpGrid& g, const std::vector<double>& omega);
// largest interpolant coefficient with some |l_d| > M/3, relative to the largest coefficient
double grid_tail(const OpGrid& g);
// A(phi) = sum_l e^{i l.phi} A(l)
Eigen::MatrixXcd evaluate_at(const ToeplitzOperator& A, const std::vector<double>& phi);

enum class Projection { Low, High, Weight };
// Low: Pi_K (|l|_1 <= K), High: Pi_K^perp, Weight: <d_phi>^b multiplies slab l by <l>^b
ToeplitzOperator project_and_weight(const ToeplitzOperator& A, Projection mode, int K, double b = 0.0);
// [A]: j-diagonal part of the l = 0 slab
ToeplitzOperator diagonal_average(const ToeplitzOperator& A);

struct MajorantOptions {
  double s = 0.0;
  int l_window = -1;  // restrict the H^s ball to |l|_inf <= l_window (default: whole box)
  int j_window = -1;
  double tol = 1e-7;
  int max_iter = 2000;
  unsigned seed = 12345;
};
// Schur test bound sqrt(max row sum * max column sum) of |A| on the whole lattice: an upper bound of the s = 0 majorant norm
double schur_bound(const ToeplitzOperator& A);
// operator norm of the entrywise-absolute matrix on the truncated H^s ball
double majorant_norm(const ToeplitzOperator& A, const MajorantOptions& opt);
inline double majorant_norm(const ToeplitzOperator& A, double s) {
  MajorantOptions o;
  o.s = s;
  return majorant_norm(A, o);
}

struct TameConstants {
  double c_s0 = 0.0;  // coefficient of ||u||_s
  double c_s = 0.0;   // coefficient of ||u||_s0
  double residual = 0.0;
  double value() const { return c_s0 + c_s; }
};

struct ProbeFamily {
  int n_random = 16;
  int n_plane = 16;
  unsigned seed = 7;
};

// tame fit for |T| u with T_j^{j'}(l) = A_j^{j'}(l) * weight(l, j, j')
TameConstants tame_fit(const ToeplitzOperator& A, const std::function<double(std::size_t, int, int)>& weight,
                       double s, const ProbeFamily& probes = {});
// <D_x>^{1/2} (<d_phi>^{b0} A) <D_x>^{1/2}
TameConstants modulo_tame_constant(const ToeplitzOperator& A, double s, double b0, const ProbeFamily& probes = {});

struct SmoothingDiagnostics {
  int rho = 0;
  int b = 0;
  // key (s, |b'|, m1, kind) with kind 0 = plain, 1 = commutator with d_x
  std::map<std::tuple<double, int, int, int>, TameConstants> table;
  // max over |b'| <= b of all entries at each s
  std::map<double, std::vector<double>> monotone;
  double max_constant() const;
};
SmoothingDiagnostics smoothing_constants(const ToeplitzOperator& A, int rho, int b, const std::vector<double>& s_list,
                                         const ProbeFamily& probes = {});

struct StructureReport {
  double reality_defect = 0.0;
  double hamiltonian_defect = 0.0;
  bool is_real = false;
  bool is_hamiltonian = false;
};
StructureReport structure_check(const ToeplitzOperator& A, double tol = 1e-9);

// Omega(u, v) = sum (J^{-1}u)_{-l,-j} v_{l,j}, j != 0
cd symplectic_form(const TorusFunction& u, const TorusFunction& v);

// flattened (l, j) x (l', j') matrix for dense oracles
Eigen::MatrixXcd dense(const ToeplitzOperator& A);
Eigen::VectorXcd flatten(const TorusFunction& u);

void write_csv(std::ostream& os, const ToeplitzOperator& A, double drop_below = 0.0);

}  // namespace qpr
