#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qpr {

using cd = std::complex<double>;
inline constexpr cd I{0.0, 1.0};

// DP dispersion relation: symbol of J = d_x + 3(1-d_xx)^{-1} d_x is i*omega_dp(j)
inline double omega_dp(double j) { return j * (4.0 + j * j) / (1.0 + j * j); }

// Truncated index set {(l, j) : |l|_inf <= l_max, |j| <= j_max} in Z^nu x Z.
// l is stored in mixed radix with offset l_max, so that -l has flat index n_ell()-1-li.
class Lattice {
public:
  Lattice() = default;
  Lattice(int nu, int l_max, int j_max);

  int nu = 1;
  int l_max = 0;
  int j_max = 0;

  int side() const { return 2 * l_max + 1; }
  int n_j() const { return 2 * j_max + 1; }
  std::size_t n_ell() const { return n_ell_; }
  std::size_t size() const { return n_ell_ * static_cast<std::size_t>(n_j()); }

  const int* ell(std::size_t li) const { return &ells_[li * nu]; }
  int ell_l1(std::size_t li) const { return l1_[li]; }
  int ell_linf(std::size_t li) const { return linf_[li]; }
  std::size_t neg(std::size_t li) const { return n_ell_ - 1 - li; }
  std::size_t zero() const { return (n_ell_ - 1) / 2; }
  // flat index of l, or npos when outside the box
  std::size_t index(const int* l) const;
  std::size_t index(const std::vector<int>& l) const { return index(l.data()); }
  // index of l1 + l2, npos if outside
  std::size_t add(std::size_t a, std::size_t b) const;
  std::size_t sub(std::size_t a, std::size_t b) const;

  int jj(int j) const { return j + j_max; }
  int j_of(int jj) const { return jj - j_max; }

  double omega_dot(const std::vector<double>& omega, std::size_t li) const;

  bool operator==(const Lattice& o) const { return nu == o.nu && l_max == o.l_max && j_max == o.j_max; }
  bool operator!=(const Lattice& o) const { return !(*this == o); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::size_t n_ell_ = 1;
  std::vector<int> ells_;
  std::vector<int> l1_, linf_;
};

// <l, j> = max(1, |l|_1, |j|)
inline double bracket(int l1, int j) {
  int a = j < 0 ? -j : j;
  int m = l1 > a ? l1 : a;
  return m < 1 ? 1.0 : static_cast<double>(m);
}
inline double bracket_l(int l1) { return l1 < 1 ? 1.0 : static_cast<double>(l1); }
inline double bracket_j(int j) { return j == 0 ? 1.0 : static_cast<double>(j < 0 ? -j : j); }

// flat index of the phi-grid node holding frequency l (wrapped mod M)
std::size_t grid_node(const Lattice& lat, std::size_t li, int M);
std::size_t grid_count(int M, int nu);

// smallest n >= target with only factors 2, 3, 5, 7
int fft_size(int target);

}  // namespace qpr
