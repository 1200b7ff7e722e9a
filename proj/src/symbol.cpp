#include "qpr/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qpr/errors.hpp"
#include "qpr/toeplitz.hpp"

namespace qpr {

namespace {

// Fornberg's weights for the n-th derivative at 0 on the integer nodes -p..p
std::vector<double> fd_weights(int n, int p) {
  int np = 2 * p + 1;
  std::vector<double> x(np);
  for (int i = 0; i < np; ++i) x[i] = i - p;
  std::vector<std::vector<double>> c(np, std::vector<double>(n + 1, 0.0));
  double c1 = 1.0, c4 = x[0];
  c[0][0] = 1.0;
  for (int i = 1; i < np; ++i) {
    int mn = std::min(i, n);
    double c2 = 1.0, c5 = c4;
    c4 = x[i];
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(np);
  for (int i = 0; i < np; ++i) w[i] = c[i][n];
  return w;
}

int fd_margin(int n) { return n == 0 ? 0 : (n + 1) / 2 + 1; }

Lattice merged(const Lattice& a, const Lattice& b) {
  if (a.nu != b.nu) throw Error("symbol: nu mismatch");
  return Lattice(a.nu, std::max(a.l_max, b.l_max), std::max(a.j_max, b.j_max));
}

std::size_t map_index(const Lattice& from, std::size_t li, const Lattice& to) { return to.index(from.ell(li)); }

// copy of a onto a larger lattice and a smaller window
Symbol embed(const Symbol& a, const Lattice& lat, int window) {
  Symbol r(lat, a.order, window);
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li) {
    std::size_t lo = map_index(a.lat, li, lat);
    if (lo == Lattice::npos) continue;
    for (int k = -std::min(a.lat.j_max, lat.j_max); k <= std::min(a.lat.j_max, lat.j_max); ++k)
      for (int xi = -window; xi <= window; ++xi) r.at(lo, k, xi) = a.at(li, k, xi);
  }
  return r;
}

double xi_weight(int xi) { return bracket_j(xi); }

}  // namespace

Symbol::Symbol(const Lattice& l, double m, int w) : lat(l), order(m), xi_window(w), valid(w) {
  c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lat.size() * (2 * w + 1)));
}

void Symbol::record_decay() {
  double K = 0.0;
  for (int xi = -valid; xi <= valid; ++xi) K = std::max(K, slice_max(*this, xi) * std::pow(xi_weight(xi), -order));
  decay_K = K;
}

Symbol fourier_multiplier(const Lattice& lat, double order, int xi_window, const std::function<cd(int)>& f) {
  Symbol a(lat, order, xi_window);
  for (int xi = -xi_window; xi <= xi_window; ++xi) a.at(lat.zero(), 0, xi) = f(xi);
  a.record_decay();
  return a;
}

Symbol j_symbol(const Lattice& lat, int xi_window) {
  return fourier_multiplier(lat, 1.0, xi_window, [](int xi) { return I * omega_dp(xi); });
}

Symbol separable(const Lattice& lat, double order, int xi_window, const Eigen::VectorXcd& g,
                 const std::function<cd(int)>& h) {
  Symbol a(lat, order, xi_window);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int k = -lat.j_max; k <= lat.j_max; ++k) {
      cd gv = g[static_cast<Eigen::Index>(li * lat.n_j() + lat.jj(k))];
      if (gv == cd(0.0)) continue;
      for (int xi = -xi_window; xi <= xi_window; ++xi) a.at(li, k, xi) = gv * h(xi);
    }
  a.record_decay();
  return a;
}

ToeplitzOperator quantize(const Symbol& a, int j_op) {
  if (j_op < 0) j_op = a.valid;
  if (j_op > a.valid)
    throw WindowError("quantize: operator truncation " + std::to_string(j_op) + " exceeds the valid xi-window " +
                      std::to_string(a.valid));
  Lattice lat(a.lat.nu, a.lat.l_max, j_op);
  ToeplitzOperator A(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    auto S = A.slab(li);
    for (int j = -j_op; j <= j_op; ++j)
      for (int jp = -j_op; jp <= j_op; ++jp) {
        int k = j - jp;
        if (std::abs(k) > a.lat.j_max) continue;
        S(lat.jj(j), lat.jj(jp)) = a.at(li, k, jp);
      }
  }
  return A;
}

Symbol compose_exact(const Symbol& a, const Symbol& b) {
  int window = std::min(a.valid - b.lat.j_max, b.valid);
  if (window < 0)
    throw WindowError("compose_exact: xi-window exhausted, need Xi >= " + std::to_string(b.valid + b.lat.j_max));
  Lattice lat(a.lat.nu, a.lat.l_max + b.lat.l_max, a.lat.j_max + b.lat.j_max);
  Symbol r(lat, a.order + b.order, window);
  for (std::size_t l1 = 0; l1 < a.lat.n_ell(); ++l1)
    for (std::size_t l2 = 0; l2 < b.lat.n_ell(); ++l2) {
      std::vector<int> l(lat.nu);
      for (int d = 0; d < lat.nu; ++d) l[d] = a.lat.ell(l1)[d] + b.lat.ell(l2)[d];
      std::size_t lo = lat.index(l);
      for (int k2 = -b.lat.j_max; k2 <= b.lat.j_max; ++k2)
        for (int k1 = -a.lat.j_max; k1 <= a.lat.j_max; ++k1)
          for (int xi = -window; xi <= window; ++xi) {
            cd bv = b.at(l2, k2, xi);
            if (bv == cd(0.0)) continue;
            r.at(lo, k1 + k2, xi) += a.at(l1, k1, xi + k2) * bv;
          }
    }
  r.record_decay();
  return r;
}

Symbol xi_derivative(const Symbol& a, int n) {
  if (n == 0) return a;
  int p = fd_margin(n);
  int window = a.valid - p;
  if (window < 0) throw WindowError("xi_derivative: window too small for the stencil");
  auto w = fd_weights(n, p);
  Symbol r(a.lat, a.order - n, window);
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
    for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k)
      for (int xi = -window; xi <= window; ++xi) {
        cd s = 0.0;
        for (int q = -p; q <= p; ++q) s += w[q + p] * a.at(li, k, xi + q);
        r.at(li, k, xi) = s;
      }
  return r;
}

Symbol x_derivative(const Symbol& a, int n) {
  Symbol r = a;
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
    for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k) {
      cd f = std::pow(I * static_cast<double>(k), n);
      for (int xi = -a.xi_window; xi <= a.xi_window; ++xi) r.at(li, k, xi) *= f;
    }
  return r;
}

Symbol multiply(const Symbol& a, const Symbol& b) {
  int window = std::min(a.valid, b.valid);
  Lattice lat(a.lat.nu, a.lat.l_max + b.lat.l_max, a.lat.j_max + b.lat.j_max);
  Symbol r(lat, a.order + b.order, window);
  for (std::size_t l1 = 0; l1 < a.lat.n_ell(); ++l1)
    for (std::size_t l2 = 0; l2 < b.lat.n_ell(); ++l2) {
      std::vector<int> l(lat.nu);
      for (int d = 0; d < lat.nu; ++d) l[d] = a.lat.ell(l1)[d] + b.lat.ell(l2)[d];
      std::size_t lo = lat.index(l);
      for (int k1 = -a.lat.j_max; k1 <= a.lat.j_max; ++k1)
        for (int k2 = -b.lat.j_max; k2 <= b.lat.j_max; ++k2)
          for (int xi = -window; xi <= window; ++xi) r.at(lo, k1 + k2, xi) += a.at(l1, k1, xi) * b.at(l2, k2, xi);
    }
  return r;
}

Symbol operator+(const Symbol& a, const Symbol& b) {
  Lattice lat = merged(a.lat, b.lat);
  int window = std::min(a.valid, b.valid);
  Symbol r = embed(a, lat, window);
  Symbol s = embed(b, lat, window);
  r.c += s.c;
  r.order = std::max(a.order, b.order);
  return r;
}

Symbol operator-(const Symbol& a, const Symbol& b) { return a + scaled(b, -1.0); }

Symbol scaled(const Symbol& a, cd s) {
  Symbol r = a;
  r.c *= s;
  return r;
}

std::pair<Symbol, Symbol> compose_asymptotic(const Symbol& a, const Symbol& b, int N) {
  if (N < 1) throw Error("compose_asymptotic: N >= 1 required");
  Symbol exact = compose_exact(a, b);
  Symbol sum;
  double fact = 1.0;
  for (int n = 0; n < N; ++n) {
    if (n > 0) fact *= n;
    Symbol da = xi_derivative(a, n);
    Symbol db = x_derivative(b, n);
    Symbol term = scaled(multiply(da, db), 1.0 / (fact * std::pow(I, n)));
    sum = (n == 0) ? term : sum + term;
  }
  int window = std::min(sum.valid, exact.valid);
  if (window < 0) throw WindowError("compose_asymptotic: window exhausted");
  Lattice lat = merged(sum.lat, exact.lat);
  Symbol expansion = embed(sum, lat, window);
  expansion.order = a.order + b.order;
  Symbol full = embed(exact, lat, window);
  Symbol rem = full;
  rem.c -= expansion.c;
  rem.order = a.order + b.order - N;
  expansion.record_decay();
  rem.record_decay();
  return {expansion, rem};
}

Symbol adjoint(const Symbol& a) {
  int window = a.valid - a.lat.j_max;
  if (window < 0) throw WindowError("adjoint: window margin smaller than the x-bandwidth");
  Symbol r(a.lat, a.order, window);
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
    for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k)
      for (int xi = -window; xi <= window; ++xi) r.at(li, k, xi) = std::conj(a.at(a.lat.neg(li), -k, xi + k));
  r.record_decay();
  return r;
}

MoyalParts moyal_commutator(const Symbol& a, const Symbol& b) {
  Symbol ab = compose_exact(a, b);
  Symbol ba = compose_exact(b, a);
  Symbol br = ab - ba;
  br.order = a.order + b.order - 1;
  // {a,b} = a_xi b_x - a_x b_xi
  Symbol pb = multiply(xi_derivative(a, 1), x_derivative(b, 1)) - multiply(x_derivative(a, 1), xi_derivative(b, 1));
  Symbol principal = scaled(pb, -I);
  principal.order = a.order + b.order - 1;
  int window = std::min(br.valid, principal.valid);
  Lattice lat = merged(br.lat, principal.lat);
  Symbol bre = embed(br, lat, window);
  Symbol pre = embed(principal, lat, window);
  Symbol rem = bre;
  rem.c -= pre.c;
  rem.order = a.order + b.order - 2;
  return {bre, pre, rem};
}

double slice_max(const Symbol& a, int xi) {
  double m = 0.0;
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
    for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k) m = std::max(m, std::abs(a.at(li, k, xi)));
  return m;
}

double max_abs(const Symbol& a) {
  double m = 0.0;
  for (int xi = -a.valid; xi <= a.valid; ++xi) m = std::max(m, slice_max(a, xi));
  return m;
}

SymbolNorm symbol_norm(const Symbol& a, double s, int alpha) {
  SymbolNorm out{a.order, s, alpha, 0.0};
  for (int beta = 0; beta <= alpha; ++beta) {
    Symbol d = xi_derivative(a, beta);
    for (int xi = -d.valid; xi <= d.valid; ++xi) {
      double acc = 0.0;
      for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
        for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k)
          acc += std::norm(d.at(li, k, xi)) * std::pow(bracket(a.lat.ell_l1(li), k), 2.0 * s);
      out.value = std::max(out.value, std::sqrt(acc) * std::pow(xi_weight(xi), -a.order + beta));
    }
  }
  return out;
}

void write_csv(std::ostream& os, const Symbol& a) {
  for (int d = 0; d < a.lat.nu; ++d) os << "l" << d + 1 << ",";
  os << "j,xi,re,im\n";
  os.precision(17);
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li)
    for (int k = -a.lat.j_max; k <= a.lat.j_max; ++k)
      for (int xi = -a.valid; xi <= a.valid; ++xi) {
        cd v = a.at(li, k, xi);
        if (v == cd(0.0)) continue;
        for (int d = 0; d < a.lat.nu; ++d) os << a.lat.ell(li)[d] << ",";
        os << k << "," << xi << "," << v.real() << "," << v.imag() << "\n";
      }
}

}  // namespace qpr
