#pragma once

#include <cmath>
#include <random>

#include "qpr/torus_function.hpp"

namespace qpr::testing {

inline cd gauss(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

// real random function, |u_{l j}| ~ <l, j>^{-p} on |l|_1 <= lk, |j| <= jk
inline TorusFunction random_real(const Lattice& lat, std::mt19937_64& rng, double amp, double p, int lk = 1 << 20,
                                 int jk = 1 << 20) {
  TorusFunction u(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    if (lat.ell_l1(li) > lk) continue;
    for (int j = -std::min(jk, lat.j_max); j <= std::min(jk, lat.j_max); ++j)
      u.at(li, j) = amp * gauss(rng) * std::pow(bracket(lat.ell_l1(li), j), -p);
  }
  u.enforce_reality();
  return u;
}

// direct evaluation of the trigonometric sum at (phi, x)
inline cd evaluate(const TorusFunction& u, const std::vector<double>& phi, double x) {
  cd acc = 0.0;
  for (std::size_t li = 0; li < u.lat.n_ell(); ++li) {
    double arg = 0.0;
    for (int d = 0; d < u.lat.nu; ++d) arg += u.lat.ell(li)[d] * phi[d];
    for (int j = -u.lat.j_max; j <= u.lat.j_max; ++j) acc += u.at(li, j) * std::exp(cd(0.0, arg + j * x));
  }
  return acc;
}

inline double max_diff(const TorusFunction& a, const TorusFunction& b) { return (a.c - b.c).cwiseAbs().maxCoeff(); }

}  // namespace qpr::testing
