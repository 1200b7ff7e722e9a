#include <doctest.h>

#include "qpr/errors.hpp"
#include "qpr/symbol.hpp"
#include "qpr/toeplitz.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

Symbol random_symbol(const Lattice& lat, double order, int Xi, std::mt19937_64& rng) {
  Symbol a(lat, order, Xi);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int k = -lat.j_max; k <= lat.j_max; ++k)
      for (int xi = -Xi; xi <= Xi; ++xi)
        a.at(li, k, xi) = gauss(rng) * std::pow(bracket_j(xi), order) * std::pow(bracket(lat.ell_l1(li), k), -2.0);
  a.record_decay();
  return a;
}

// C(l; j, j') = sum_{l1 + l2 = l} sum_m A(l1; j, m) B(l2; m, j')
cd product_entry(const ToeplitzOperator& A, const ToeplitzOperator& B, const std::vector<int>& l, int j, int jp) {
  cd acc = 0.0;
  const int Jb = A.lat.j_max;
  for (std::size_t l1 = 0; l1 < A.lat.n_ell(); ++l1) {
    std::vector<int> l2(l.size());
    for (std::size_t d = 0; d < l.size(); ++d) l2[d] = l[d] - A.lat.ell(l1)[d];
    std::size_t i2 = B.lat.index(l2);
    if (i2 == Lattice::npos) continue;
    for (int m = -Jb; m <= Jb; ++m) acc += A.at(l1, j, m) * B.at(i2, m, jp);
  }
  return acc;
}

}  // namespace

TEST_CASE("quantization places a_hat(l, j - j'; j') in the matrix") {
  std::mt19937_64 rng(1);
  Lattice lat(1, 1, 2);
  Symbol a = random_symbol(lat, 1.0, 10, rng);
  ToeplitzOperator A = quantize(a, 6);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -6; j <= 6; ++j)
      for (int jp = -6; jp <= 6; ++jp) {
        cd expect = std::abs(j - jp) <= 2 ? a.at(li, j - jp, jp) : cd(0.0);
        CHECK(A.at(li, j, jp) == expect);
      }
  CHECK_THROWS_AS(quantize(a, 11), WindowError);
}

TEST_CASE("exact composition reproduces the operator product") {
  std::mt19937_64 rng(2);
  Lattice lat(2, 1, 2);
  Symbol a = random_symbol(lat, 1.0, 30, rng), b = random_symbol(lat, -2.0, 30, rng);
  Symbol c = compose_exact(a, b);
  CHECK(c.order == -1.0);
  const int W = 12, Jb = W + 4;
  ToeplitzOperator A = quantize(a, Jb), B = quantize(b, Jb), C = quantize(c, W);
  double err = 0.0, scale = 0.0;
  for (std::size_t li = 0; li < C.lat.n_ell(); ++li) {
    std::vector<int> l{C.lat.ell(li)[0], C.lat.ell(li)[1]};
    for (int j = -W; j <= W; ++j)
      for (int jp = -W; jp <= W; ++jp) {
        cd p = product_entry(A, B, l, j, jp);
        err = std::max(err, std::abs(p - C.at(li, j, jp)));
        scale = std::max(scale, std::abs(p));
      }
  }
  CHECK(err <= 1e-13 * scale);
}

TEST_CASE("fourier multipliers compose by multiplication") {
  Lattice lat(1, 0, 0);
  Symbol a = fourier_multiplier(lat, 1.0, 20, [](int xi) { return cd(xi, 1.0); });
  Symbol b = fourier_multiplier(lat, -1.0, 20, [](int xi) { return cd(1.0 / (1.0 + xi * xi)); });
  Symbol c = compose_exact(a, b);
  for (int xi = -20; xi <= 20; ++xi) CHECK(std::abs(c.at(0, 0, xi) - cd(xi, 1.0) / (1.0 + xi * xi)) < 1e-15);
}

TEST_CASE("a multiplication on the left composes pointwise") {
  std::mt19937_64 rng(3);
  Lattice lat(1, 1, 2);
  Symbol c = random_symbol(lat, 0.0, 20, rng);
  for (auto& v : c.c) v = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int k = -2; k <= 2; ++k) {
      cd g = gauss(rng);
      for (int xi = -20; xi <= 20; ++xi) c.at(li, k, xi) = g;
    }
  Symbol b = random_symbol(lat, 1.0, 24, rng);
  Symbol lhs = compose_exact(c, b), rhs = multiply(c, b);
  double err = 0.0;
  for (std::size_t li = 0; li < lhs.lat.n_ell(); ++li) {
    std::vector<int> l{lhs.lat.ell(li)[0]};
    std::size_t ri = rhs.lat.index(l);
    for (int k = -lhs.lat.j_max; k <= lhs.lat.j_max; ++k)
      for (int xi = -lhs.valid; xi <= lhs.valid; ++xi) {
        cd r = (ri == Lattice::npos || std::abs(k) > rhs.lat.j_max || std::abs(xi) > rhs.valid) ? cd(0.0)
                                                                                                : rhs.at(ri, k, xi);
        err = std::max(err, std::abs(lhs.at(li, k, xi) - r));
      }
  }
  CHECK(err < 1e-13 * max_abs(lhs));
}

TEST_CASE("asymptotic expansion") {
  std::mt19937_64 rng(4);
  Lattice lat(1, 1, 2);
  Symbol a = random_symbol(lat, 1.0, 60, rng), b = random_symbol(lat, 0.0, 60, rng);
  Symbol ex = compose_exact(a, b);
  for (int N = 1; N <= 4; ++N) {
    auto [e, r] = compose_asymptotic(a, b, N);
    CHECK(r.order == a.order + b.order - N);
    CHECK(max_abs((e + r) - ex) <= 1e-13 * max_abs(ex));
  }
  // leading term is the product
  auto [e1, r1] = compose_asymptotic(a, b, 1);
  CHECK(max_abs(e1 - multiply(a, b)) < 1e-13);
}

TEST_CASE("remainder decays like <xi>^{m + m' - N}") {
  Lattice lat(1, 0, 2);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(lat.n_j()), h = g;
  g[lat.jj(1)] = cd(0.3, 0.1);
  g[lat.jj(-1)] = std::conj(g[lat.jj(1)]);
  g[lat.jj(0)] = 1.0;
  h[lat.jj(2)] = cd(-0.2, 0.4);
  h[lat.jj(-2)] = std::conj(h[lat.jj(2)]);
  // xi itself: derivatives of order >= 2 vanish, so r_1 = -i a_xi b_x is exactly order 0 and r_2 = 0
  Symbol a = separable(lat, 1.0, 120, g, [](int xi) { return cd(xi); });
  Symbol b = separable(lat, 0.0, 120, h, [](int xi) { return cd(1.0 + 1.0 / (1.0 + xi * xi)); });
  auto r1 = compose_asymptotic(a, b, 1).second;
  auto r2 = compose_asymptotic(a, b, 2).second;
  CHECK(slice_max(r1, 100) > 1e-3);
  CHECK(slice_max(r1, 100) / slice_max(r1, 50) > 0.99);
  CHECK(slice_max(r1, 100) / slice_max(r1, 50) < 1.01);
  CHECK(max_abs(r2) < 1e-12);

  Symbol c = separable(lat, 1.0, 200, g, [](int xi) { return cd(std::sqrt(1.0 + double(xi) * xi) + 2.0 * xi / std::sqrt(4.0 + double(xi) * xi)); });
  // <xi>^{N - 1} |r_N| stays bounded: its value at the window edge is below twice its maximum on [20, valid/2]
  for (int N = 1; N <= 3; ++N) {
    auto r = compose_asymptotic(c, b, N).second;
    auto weighted = [&](int xi) { return slice_max(r, xi) * std::pow(double(xi), N - 1.0); };
    double inner = 0.0;
    for (int xi = 20; xi <= r.valid / 2; ++xi) inner = std::max(inner, weighted(xi));
    CHECK(weighted(r.valid) <= 2.0 * inner);
    CHECK(inner > 0.0);
  }
}

TEST_CASE("adjoint symbol quantizes to the adjoint matrix") {
  std::mt19937_64 rng(5);
  Lattice lat(1, 1, 2);
  Symbol a = random_symbol(lat, 1.0, 20, rng);
  Symbol s = adjoint(a);
  ToeplitzOperator A = quantize(a, 16), S = quantize(s, 16);
  // (A^*)(l; j, j') = conj(A(-l; j', j))
  double err = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -14; j <= 14; ++j)
      for (int jp = -14; jp <= 14; ++jp)
        err = std::max(err, std::abs(S.at(li, j, jp) - std::conj(A.at(lat.neg(li), jp, j))));
  CHECK(err < 1e-15);
}

TEST_CASE("commutator principal part is -i{a, b}") {
  std::mt19937_64 rng(6);
  Lattice lat(1, 0, 1);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(lat.n_j()), h = g;
  g[lat.jj(1)] = 0.5;
  g[lat.jj(-1)] = 0.5;
  h[lat.jj(1)] = cd(0.0, 0.5);
  h[lat.jj(-1)] = cd(0.0, -0.5);
  h[lat.jj(0)] = 1.0;
  Symbol a = separable(lat, 2.0, 150, g, [](int xi) { return cd(1.0 + double(xi) * xi); });
  Symbol b = separable(lat, 1.0, 150, h, [](int xi) { return cd(std::sqrt(1.0 + double(xi) * xi)); });
  auto parts = moyal_commutator(a, b);
  CHECK(parts.remainder.order == 1.0);
  double r40 = slice_max(parts.remainder, 40), r120 = slice_max(parts.remainder, 120);
  double p40 = slice_max(parts.principal, 40), p120 = slice_max(parts.principal, 120);
  // principal grows like xi^2, remainder at most like xi
  CHECK(std::log(p120 / p40) / std::log(3.0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::log(r120 / r40) / std::log(3.0) <= 1.05);
}

TEST_CASE("finite differences in xi are exact on cubics") {
  Lattice lat(1, 0, 0);
  Symbol a = fourier_multiplier(lat, 3.0, 30, [](int xi) { return cd(double(xi) * xi * xi - 2.0 * xi); });
  Symbol d1 = xi_derivative(a, 1), d2 = xi_derivative(a, 2);
  CHECK(d1.valid < 30);
  for (int xi = -d2.valid; xi <= d2.valid; ++xi) {
    CHECK(std::abs(d1.at(0, 0, xi) - (3.0 * xi * xi - 2.0)) < 1e-9);
    CHECK(std::abs(d2.at(0, 0, xi) - 6.0 * xi) < 1e-9);
  }
}

TEST_CASE("symbol of J") {
  Symbol j = j_symbol(Lattice(1, 0, 0), 16);
  ToeplitzOperator J = quantize(j, 16);
  Eigen::MatrixXcd D = J.slab(0);
  CHECK((D + D.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(D(J.lat.jj(2), J.lat.jj(2)) - I * omega_dp(2)) < 1e-15);
  CHECK(D(J.lat.jj(1), J.lat.jj(2)) == cd(0.0));
}

TEST_CASE("window bookkeeping") {
  std::mt19937_64 rng(7);
  Lattice lat(1, 0, 5);
  Symbol a = random_symbol(lat, 0.0, 4, rng), b = random_symbol(lat, 0.0, 4, rng);
  CHECK_THROWS_AS(compose_exact(a, b), WindowError);
}
