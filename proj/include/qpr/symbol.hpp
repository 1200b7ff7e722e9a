#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <utility>

#include "qpr/lattice.hpp"

namespace qpr {

class ToeplitzOperator;

// a(phi, x, xi) = sum_{l,k} a_hat(l, k; xi) e^{i(l.phi + k x)}, xi integer in [-Xi, Xi].
// `valid` is the radius on which the values are trustworthy after window-consuming operations.
struct Symbol {
  Lattice lat;  // (nu, l_max, j_max) of the (phi, x) Fourier support
  double order = 0.0;
  int xi_window = 0;
  int valid = 0;
  double decay_K = 0.0;
  Eigen::VectorXcd c;

  Symbol() = default;
  Symbol(const Lattice& l, double order, int xi_window);

  std::size_t idx(std::size_t li, int k, int xi) const {
    return (li * lat.n_j() + lat.jj(k)) * static_cast<std::size_t>(2 * xi_window + 1) + (xi + xi_window);
  }
  cd& at(std::size_t li, int k, int xi) { return c[static_cast<Eigen::Index>(idx(li, k, xi))]; }
  cd at(std::size_t li, int k, int xi) const { return c[static_cast<Eigen::Index>(idx(li, k, xi))]; }

  // recompute decay_K = max_xi max_{l,k} |a| <xi>^{-m} over the valid window
  void record_decay();
};

// a(phi,x,xi) = f(xi) (independent of phi, x)
Symbol fourier_multiplier(const Lattice& lat, double order, int xi_window, const std::function<cd(int)>& f);
// symbol of J: i*omega_dp(xi)
Symbol j_symbol(const Lattice& lat, int xi_window);
// a(phi,x,xi) = sum_k g_k(phi,x) h_k(xi): separable builder, g given as lattice coefficients
Symbol separable(const Lattice& lat, double order, int xi_window, const Eigen::VectorXcd& g,
                 const std::function<cd(int)>& h);

// A_j^{j'}(l) = a_hat(l, j - j'; j'), operator truncation |j| <= j_op (default: valid window)
ToeplitzOperator quantize(const Symbol& a, int j_op = -1);

Symbol compose_exact(const Symbol& a, const Symbol& b);
// (a #_{<N} b, r_N) with a#_{<N}b + r_N = a#b on the shared window
std::pair<Symbol, Symbol> compose_asymptotic(const Symbol& a, const Symbol& b, int N);
Symbol adjoint(const Symbol& a);

struct MoyalParts {
  Symbol bracket;    // a#b - b#a
  Symbol principal;  // -i{a,b}
  Symbol remainder;  // bracket - principal, order m+m'-2
};
MoyalParts moyal_commutator(const Symbol& a, const Symbol& b);

struct SymbolNorm {
  double m = 0.0, s = 0.0;
  int alpha = 0;
  double value = 0.0;
};
SymbolNorm symbol_norm(const Symbol& a, double s, int alpha);

// n-th xi-derivative by 4th-order central finite differences on the integer grid
Symbol xi_derivative(const Symbol& a, int n);
// d_x^n of the coefficients
Symbol x_derivative(const Symbol& a, int n);
// pointwise (in phi, x, xi) product a*b, exact on the merged lattice
Symbol multiply(const Symbol& a, const Symbol& b);
Symbol operator+(const Symbol& a, const Symbol& b);
Symbol operator-(const Symbol& a, const Symbol& b);
Symbol scaled(const Symbol& a, cd s);
// max |a| over the valid window
double max_abs(const Symbol& a);
// sup_{l,k} |a_hat(l,k;xi)| at a single xi
double slice_max(const Symbol& a, int xi);

void write_csv(std::ostream& os, const Symbol& a);

}  // namespace qpr
