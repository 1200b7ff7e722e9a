#include "qpr/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace qpr {

Lattice::Lattice(int nu_, int l_max_, int j_max_) : nu(nu_), l_max(l_max_), j_max(j_max_) {
  if (nu < 1 || l_max < 0 || j_max < 0) throw std::invalid_argument("Lattice: bad truncation");
  n_ell_ = 1;
  for (int d = 0; d < nu; ++d) n_ell_ *= static_cast<std::size_t>(side());
  ells_.resize(n_ell_ * nu);
  l1_.resize(n_ell_);
  linf_.resize(n_ell_);
  for (std::size_t li = 0; li < n_ell_; ++li) {
    std::size_t r = li;
    int s1 = 0, si = 0;
    for (int d = nu - 1; d >= 0; --d) {
      int v = static_cast<int>(r % side()) - l_max;
      r /= side();
      ells_[li * nu + d] = v;
      s1 += std::abs(v);
      si = std::max(si, std::abs(v));
    }
    l1_[li] = s1;
    linf_[li] = si;
  }
}

std::size_t Lattice::index(const int* l) const {
  std::size_t r = 0;
  for (int d = 0; d < nu; ++d) {
    if (l[d] < -l_max || l[d] > l_max) return npos;
    r = r * side() + static_cast<std::size_t>(l[d] + l_max);
  }
  return r;
}

std::size_t Lattice::add(std::size_t a, std::size_t b) const {
  std::size_t r = 0;
  for (int d = 0; d < nu; ++d) {
    int v = ells_[a * nu + d] + ells_[b * nu + d];
    if (v < -l_max || v > l_max) return npos;
    r = r * side() + static_cast<std::size_t>(v + l_max);
  }
  return r;
}

std::size_t Lattice::sub(std::size_t a, std::size_t b) const { return add(a, neg(b)); }

double Lattice::omega_dot(const std::vector<double>& omega, std::size_t li) const {
  double s = 0.0;
  for (int d = 0; d < nu; ++d) s += omega[d] * ells_[li * nu + d];
  return s;
}

std::size_t grid_node(const Lattice& lat, std::size_t li, int M) {
  const int* l = lat.ell(li);
  std::size_t r = 0;
  for (int d = 0; d < lat.nu; ++d) {
    int w = l[d] % M;
    if (w < 0) w += M;
    r = r * M + static_cast<std::size_t>(w);
  }
  return r;
}

std::size_t grid_count(int M, int nu) {
  std::size_t r = 1;
  for (int d = 0; d < nu; ++d) r *= static_cast<std::size_t>(M);
  return r;
}

int fft_size(int target) {
  for (int n = std::max(1, target);; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

}  // namespace qpr
