#include "qpr/torus_function.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qpr/errors.hpp"
#include "qpr/fft.hpp"

namespace qpr {

namespace {

std::size_t pow_size(int M, int nu) {
  std::size_t r = 1;
  for (int d = 0; d < nu; ++d) r *= static_cast<std::size_t>(M);
  return r;
}

std::size_t node_of(const Lattice& lat, std::size_t li, int M) {
  const int* l = lat.ell(li);
  std::size_t r = 0;
  for (int d = 0; d < lat.nu; ++d) r = r * M + static_cast<std::size_t>(wrap(l[d], M));
  return r;
}

std::vector<int> dims_of(int nu, int M, int Nx) {
  std::vector<int> d(nu, M);
  if (Nx > 0) d.push_back(Nx);
  return d;
}

}  // namespace

double TorusFunction::reality_defect() const {
  double worst = 0.0;
  const int nj = lat.n_j();
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int jj = 0; jj < nj; ++jj) {
      cd a = c[static_cast<Eigen::Index>(li * nj + jj)];
      cd b = c[static_cast<Eigen::Index>(lat.neg(li) * nj + (nj - 1 - jj))];
      worst = std::max(worst, std::abs(b - std::conj(a)));
    }
  return worst;
}

void TorusFunction::enforce_reality() {
  const int nj = lat.n_j();
  Eigen::VectorXcd r = c;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int jj = 0; jj < nj; ++jj) {
      auto k = static_cast<Eigen::Index>(li * nj + jj);
      auto km = static_cast<Eigen::Index>(lat.neg(li) * nj + (nj - 1 - jj));
      r[k] = 0.5 * (c[k] + std::conj(c[km]));
    }
  c = r;
}

TorusFunction TorusFunction::resized(const Lattice& other) const {
  TorusFunction r(other);
  r.zero_mean = zero_mean;
  if (other.nu != lat.nu) throw Error("resized: nu mismatch");
  std::vector<int> l(lat.nu);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    const int* e = lat.ell(li);
    std::size_t lo = other.index(e);
    if (lo == Lattice::npos) continue;
    int jm = std::min(lat.j_max, other.j_max);
    for (int j = -jm; j <= jm; ++j) r.at(lo, j) = at(li, j);
  }
  return r;
}

TorusFunction from_modes(const Lattice& lat, const std::vector<Mode>& modes) {
  TorusFunction u(lat);
  for (const auto& m : modes) {
    if (static_cast<int>(m.ell.size()) != lat.nu) throw ConfigError("mode has wrong number of frequencies");
    std::size_t li = lat.index(m.ell);
    if (li == Lattice::npos || std::abs(m.j) > lat.j_max) throw ConfigError("mode outside the truncation lattice");
    if (li == lat.zero() && m.j == 0) {
      u.at(li, 0) += m.amplitude * std::cos(m.phase);
      continue;
    }
    cd h = 0.5 * m.amplitude * std::exp(I * m.phase);
    u.at(li, m.j) += h;
    u.at(lat.neg(li), -m.j) += std::conj(h);
  }
  return u;
}

double sobolev_norm(const TorusFunction& u, double s) {
  const Lattice& lat = u.lat;
  double acc = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j) {
      double w = std::pow(bracket(lat.ell_l1(li), j), 2.0 * s);
      acc += std::norm(u.at(li, j)) * w;
    }
  return std::sqrt(acc);
}

double lip_norm(const LipFamily& f, double s) {
  if (f.values.size() < 2 || f.omegas.size() != f.values.size())
    throw Error("lip_norm: a Lipschitz family needs at least two samples");
  double sup = 0.0;
  for (const auto& v : f.values) sup = std::max(sup, sobolev_norm(v, s));
  double lip = 0.0;
  for (std::size_t a = 0; a < f.values.size(); ++a)
    for (std::size_t b = a + 1; b < f.values.size(); ++b) {
      double dw = 0.0;
      for (std::size_t d = 0; d < f.omegas[a].size(); ++d) dw += std::pow(f.omegas[a][d] - f.omegas[b][d], 2);
      dw = std::sqrt(dw);
      if (dw == 0.0) throw Error("lip_norm: repeated frequency sample");
      TorusFunction diff(f.values[a].lat);
      diff.c = f.values[a].c - f.values[b].c;
      lip = std::max(lip, sobolev_norm(diff, std::max(0.0, s - 1.0)) / dw);
    }
  return sup + f.gamma * lip;
}

int phi_grid(const Lattice& lat) { return fft_size(2 * lat.side() + 1); }
int x_grid(const Lattice& lat) { return fft_size(2 * lat.n_j() + 1); }

std::vector<cd> to_grid(const TorusFunction& u, int M, int Nx) {
  const Lattice& lat = u.lat;
  std::size_t nodes = pow_size(M, lat.nu);
  std::vector<cd> g(nodes * Nx, cd(0.0));
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    std::size_t n = node_of(lat, li, M);
    for (int j = -lat.j_max; j <= lat.j_max; ++j) g[n * Nx + wrap(j, Nx)] += u.at(li, j);
  }
  dft(g.data(), dims_of(lat.nu, M, Nx), 1, 1, 0, +1);
  return g;
}

TorusFunction from_grid(std::vector<cd> g, const Lattice& lat, int M, int Nx) {
  std::size_t nodes = pow_size(M, lat.nu);
  dft(g.data(), dims_of(lat.nu, M, Nx), 1, 1, 0, -1);
  double scale = 1.0 / (static_cast<double>(nodes) * Nx);
  TorusFunction u(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    std::size_t n = node_of(lat, li, M);
    for (int j = -lat.j_max; j <= lat.j_max; ++j) u.at(li, j) = g[n * Nx + wrap(j, Nx)] * scale;
  }
  return u;
}

std::vector<cd> phi_nodes(const TorusFunction& u, int M) {
  const Lattice& lat = u.lat;
  const int nj = lat.n_j();
  std::size_t nodes = pow_size(M, lat.nu);
  std::vector<cd> g(nodes * nj, cd(0.0));
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    std::size_t n = node_of(lat, li, M);
    for (int jj = 0; jj < nj; ++jj) g[n * nj + jj] += u.c[static_cast<Eigen::Index>(li * nj + jj)];
  }
  dft(g.data(), dims_of(lat.nu, M, 0), nj, nj, 1, +1);
  return g;
}

TorusFunction pointwise_product(const TorusFunction& u, const TorusFunction& v) {
  if (u.lat != v.lat) throw Error("pointwise_product: incompatible truncations");
  int M = phi_grid(u.lat), Nx = x_grid(u.lat);
  auto gu = to_grid(u, M, Nx);
  auto gv = to_grid(v, M, Nx);
  for (std::size_t k = 0; k < gu.size(); ++k) gu[k] *= gv[k];
  return from_grid(std::move(gu), u.lat, M, Nx);
}

TorusFunction dx(const TorusFunction& u) {
  TorusFunction r(u.lat);
  for (std::size_t li = 0; li < u.lat.n_ell(); ++li)
    for (int j = -u.lat.j_max; j <= u.lat.j_max; ++j) r.at(li, j) = I * static_cast<double>(j) * u.at(li, j);
  r.zero_mean = true;
  return r;
}

TorusFunction omega_dphi(const TorusFunction& u, const std::vector<double>& omega) {
  TorusFunction r(u.lat);
  for (std::size_t li = 0; li < u.lat.n_ell(); ++li) {
    double w = u.lat.omega_dot(omega, li);
    for (int j = -u.lat.j_max; j <= u.lat.j_max; ++j) r.at(li, j) = I * w * u.at(li, j);
  }
  return r;
}

TorusFunction operator+(const TorusFunction& a, const TorusFunction& b) {
  TorusFunction r(a.lat);
  r.c = a.c + b.c;
  return r;
}
TorusFunction operator-(const TorusFunction& a, const TorusFunction& b) {
  TorusFunction r(a.lat);
  r.c = a.c - b.c;
  return r;
}
TorusFunction operator*(double s, const TorusFunction& a) {
  TorusFunction r(a.lat);
  r.c = s * a.c;
  r.zero_mean = a.zero_mean;
  return r;
}

double sup_norm(const TorusFunction& u) {
  auto g = to_grid(u, phi_grid(u.lat), x_grid(u.lat));
  double m = 0.0;
  for (const auto& z : g) m = std::max(m, std::abs(z));
  return m;
}

double sup_dx(const TorusFunction& u) { return sup_norm(dx(u)); }

cd eval_series(const cd* c, int j_max, double y) {
  // Horner in z = e^{iy}, then shift by z^{-J}
  cd z = std::exp(I * y);
  cd acc = 0.0;
  for (int jj = 2 * j_max; jj >= 0; --jj) acc = acc * z + c[jj];
  return acc * std::exp(-I * (static_cast<double>(j_max) * y));
}

TorusFunction compose_diffeo(const TorusFunction& u, const TorusFunction& beta, double tau) {
  if (u.lat.nu != beta.lat.nu) throw Error("compose_diffeo: nu mismatch");
  if (tau * sup_dx(beta) >= 1.0)
    throw DiffeoError("compose_diffeo: sup|tau*beta_x| >= 1, x + tau*beta is not a diffeomorphism");
  const Lattice& lat = u.lat;
  int M = std::max(phi_grid(lat), phi_grid(beta.lat));
  int Nx = std::max(x_grid(lat), x_grid(beta.lat));
  auto gb = to_grid(beta, M, Nx);
  auto un = phi_nodes(u, M);
  const int nj = lat.n_j();
  std::size_t nodes = gb.size() / Nx;
  std::vector<cd> out(gb.size());
  for (std::size_t n = 0; n < nodes; ++n)
    for (int k = 0; k < Nx; ++k) {
      double x = 2.0 * M_PI * k / Nx;
      double y = x + tau * gb[n * Nx + k].real();
      out[n * Nx + k] = eval_series(&un[n * nj], lat.j_max, y);
    }
  return from_grid(std::move(out), lat, M, Nx);
}

InverseDiffeo invert_diffeo(const TorusFunction& beta, double tol, int max_iter) {
  double lip = sup_dx(beta);
  if (lip >= 1.0) throw DiffeoError("invert_diffeo: sup|beta_x| >= 1, fixed-point map is not a contraction");
  const Lattice& lat = beta.lat;
  int M = phi_grid(lat), Nx = x_grid(lat);
  auto bn = phi_nodes(beta, M);
  const int nj = lat.n_j();
  std::size_t nodes = bn.size() / nj;
  std::vector<cd> vals(nodes * Nx);
  int worst_iter = 0;
  double worst_step = 0.0;
  for (std::size_t n = 0; n < nodes; ++n)
    for (int k = 0; k < Nx; ++k) {
      double x = 2.0 * M_PI * k / Nx;
      double t = 0.0, step = 1.0;
      int it = 0;
      while (it < max_iter) {
        double tn = -eval_series(&bn[n * nj], lat.j_max, x + t).real();
        step = std::abs(tn - t);
        t = tn;
        ++it;
        if (step <= tol) break;
      }
      worst_iter = std::max(worst_iter, it);
      worst_step = std::max(worst_step, step);
      vals[n * Nx + k] = t;
    }
  InverseDiffeo r;
  r.beta_tilde = from_grid(std::move(vals), lat, M, Nx);
  r.beta_tilde.enforce_reality();
  r.iterations = worst_iter;
  // residual of beta(x) + beta_tilde(x + beta(x)) on the grid
  auto gb = to_grid(beta, M, Nx);
  auto tn = phi_nodes(r.beta_tilde, M);
  double res = 0.0;
  for (std::size_t n = 0; n < nodes; ++n)
    for (int k = 0; k < Nx; ++k) {
      double x = 2.0 * M_PI * k / Nx;
      double b = gb[n * Nx + k].real();
      res = std::max(res, std::abs(b + eval_series(&tn[n * nj], lat.j_max, x + b).real()));
    }
  r.residual = res;
  if (worst_step > tol && worst_step > 10 * res)
    throw ConvergenceError("invert_diffeo: fixed point did not converge, last step " + std::to_string(worst_step),
                           {worst_step, res});
  return r;
}

void write_csv(std::ostream& os, const TorusFunction& u) {
  const Lattice& lat = u.lat;
  for (int d = 0; d < lat.nu; ++d) os << "l" << d + 1 << ",";
  os << "j,re,im\n";
  os.precision(17);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j) {
      cd v = u.at(li, j);
      if (v == cd(0.0)) continue;
      for (int d = 0; d < lat.nu; ++d) os << lat.ell(li)[d] << ",";
      os << j << "," << v.real() << "," << v.imag() << "\n";
    }
}

}  // namespace qpr
