#include "qpr/straightening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qpr/errors.hpp"

namespace qpr {

namespace {

double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<int> ell_vec(const Lattice& lat, std::size_t li) { return {lat.ell(li), lat.ell(li) + lat.nu}; }

std::string ell_str(const std::vector<int>& l) {
  std::string s = "(";
  for (std::size_t d = 0; d < l.size(); ++d) s += (d ? "," : "") + std::to_string(l[d]);
  return s + ")";
}

void note(ResonanceScan& r, double ratio, const Lattice& lat, std::size_t li, int j, int jp, double div, double bound) {
  if (ratio < r.margin || r.ell.empty()) {
    r.margin = ratio;
    r.ell = ell_vec(lat, li);
    r.j = j;
    r.jp = jp;
    r.divisor = div;
    r.bound = bound;
  }
  if (ratio < 1.0) r.ok = false;
}

// omega.d_phi h - m d_x h = f on every mode except (0,0); the j = 0 slab uses omega.l alone
TorusFunction full_transport_solve(const TorusFunction& f, const std::vector<double>& omega, double m, double gamma,
                                   double tau) {
  const Lattice& lat = f.lat;
  TorusFunction h(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    double wl = lat.omega_dot(omega, li);
    double floor = gamma * std::pow(bracket_l(lat.ell_l1(li)), -tau);
    for (int j = -lat.j_max; j <= lat.j_max; ++j) {
      if (li == lat.zero() && j == 0) continue;
      cd v = f.at(li, j);
      if (v == cd(0.0)) continue;
      double div = wl - m * j;
      if (std::abs(div) < floor)
        throw SmallDivisorError("straightening: divisor |omega.l - m j| = " + std::to_string(std::abs(div)) +
                                    " below gamma<l>^-tau at l = " + ell_str(ell_vec(lat, li)) + ", j = " +
                                    std::to_string(j),
                                ell_vec(lat, li), j, 0, div);
      h.at(li, j) = v / (I * div);
    }
  }
  return h;
}

}  // namespace

void FrequencyConfig::validate() const {
  if (nu < 1) throw ConfigError("frequency.nu: must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("frequency.gamma: must lie in (0,1)");
  if (!tau_override && tau < 2.0 * nu + 6.0) throw ConfigError("frequency.tau: must be >= 2 nu + 6");
  if (static_cast<int>(omega.size()) != nu) throw ConfigError("frequency.omega: needs nu components");
  for (double w : omega)
    if (w < L - 1e-12 || w > 2.0 * L + 1e-12) throw ConfigError("frequency.omega: components must lie in [L, 2L]");
}

ResonanceScan diophantine_zeroth(const std::vector<double>& omega, double gamma, int ell_max) {
  ResonanceScan r;
  r.margin = std::numeric_limits<double>::infinity();
  if (ell_max <= 0) return r;
  int nu = static_cast<int>(omega.size());
  Lattice lat(nu, ell_max, 0);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    if (li == lat.zero()) continue;
    double bound = 2.0 * gamma * std::pow(bracket_l(lat.ell_l1(li)), -nu);
    double div = lat.omega_dot(omega, li);
    note(r, bound > 0 ? std::abs(div) / bound : std::numeric_limits<double>::infinity(), lat, li, 0, 0, div, bound);
  }
  return r;
}

ResonanceScan melnikov_first(const std::vector<double>& omega, double m, double gamma, double tau, int ell_max,
                             int j_max) {
  if (m <= 0.0) throw Error("melnikov_first: m must be positive");
  ResonanceScan r;
  r.margin = std::numeric_limits<double>::infinity();
  int nu = static_cast<int>(omega.size());
  Lattice lat(nu, std::max(ell_max, 0), 0);
  double wmax = norm_inf(omega);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    int l1 = lat.ell_l1(li);
    int jb = std::min(j_max, static_cast<int>(std::floor(4.0 * wmax * l1 / m)));
    double wl = lat.omega_dot(omega, li);
    double bound = 2.0 * gamma * std::pow(bracket_l(l1), -tau);
    for (int j = -jb; j <= jb; ++j) {
      if (j == 0) continue;
      double div = wl - m * j;
      double ratio = bound > 0 ? std::abs(div) / bound : (div == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      note(r, ratio, lat, li, j, 0, div, bound);
    }
  }
  return r;
}

TorusFunction transport_homological_solve(const TorusFunction& a, const std::vector<double>& omega, double m,
                                          double gamma, double tau) {
  TorusFunction f = a;
  for (std::size_t li = 0; li < a.lat.n_ell(); ++li) f.at(li, 0) = 0.0;
  return full_transport_solve(f, omega, m, gamma, tau);
}

double straightening_residual(const TorusFunction& a, const TorusFunction& bt, const std::vector<double>& omega,
                              double m) {
  const Lattice& lat = a.lat;
  int M = phi_grid(lat), Nx = x_grid(lat);
  auto gw = to_grid(omega_dphi(bt, omega), M, Nx);
  auto ga = to_grid(a, M, Nx);
  auto gx = to_grid(dx(bt), M, Nx);
  double r = 0.0;
  for (std::size_t k = 0; k < gw.size(); ++k)
    r = std::max(r, std::abs(gw[k].real() - (1.0 + ga[k].real()) * (1.0 + gx[k].real()) + m));
  return r;
}

StraighteningResult straighten_iterate(const TorusFunction& a, const FrequencyConfig& freq,
                                       const StraightenOptions& opt) {
  const Lattice& lat = a.lat;
  StraighteningResult res;
  TorusFunction an = a;
  TorusFunction g(lat);
  double m = 1.0;
  for (int it = 0;; ++it) {
    double mu = an.mean().real();
    TorusFunction dev = an;
    dev.at(lat.zero(), 0) = 0.0;
    double d = sup_norm(dev);
    res.history.push_back(d);
    if (d <= opt.tol) {
      m += mu;
      res.iterations = it;
      break;
    }
    if (it >= opt.max_iter)
      throw ConvergenceError("straighten_iterate: no convergence after " + std::to_string(opt.max_iter) +
                                 " iterations, last sup|a_n - <a_n>| = " + std::to_string(d),
                             res.history);
    if (it > 3 && d > 0.5 * res.history[res.history.size() - 2] && d < 1e3 * opt.tol) {
      // round-off floor reached
      m += mu;
      res.iterations = it;
      break;
    }
    TorusFunction h = full_transport_solve(dev, freq.omega, m, freq.gamma, freq.tau);
    TorusFunction hx = dx(h);
    InverseDiffeo hi = invert_diffeo(h);
    an = compose_diffeo(pointwise_product(an, hx), hi.beta_tilde, 1.0);
    an.enforce_reality();
    m += mu;
    g = g + compose_diffeo(h, g, 1.0);
    g.enforce_reality();
  }
  res.m = m;
  res.beta_tilde = g;
  InverseDiffeo gi = invert_diffeo(g);
  res.beta = gi.beta_tilde;
  res.inverse_residual = gi.residual;
  res.residual = straightening_residual(a, g, freq.omega, m);
  return res;
}

}  // namespace qpr
