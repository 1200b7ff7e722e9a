#include "qpr/evolution.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "qpr/errors.hpp"

namespace qpr {

double hs_norm_x(const Eigen::VectorXcd& u, double s) {
  const int J = static_cast<int>(u.size() - 1) / 2;
  double acc = 0.0;
  for (int j = -J; j <= J; ++j) acc += std::pow(bracket_j(j), 2.0 * s) * std::norm(u[j + J]);
  return std::sqrt(acc);
}

Eigen::VectorXcd state_from(const TorusFunction& u0, int j_max) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2 * j_max + 1);
  const Lattice& lat = u0.lat;
  std::size_t l0 = lat.index(std::vector<int>(lat.nu, 0));
  for (int j = -std::min(j_max, lat.j_max); j <= std::min(j_max, lat.j_max); ++j) v[j + j_max] = u0.at(l0, j);
  return v;
}

namespace {

double reality_of(const Eigen::VectorXcd& u) {
  const int J = static_cast<int>(u.size() - 1) / 2;
  double r = 0.0;
  for (int j = 1; j <= J; ++j) r = std::max(r, std::abs(u[J - j] - std::conj(u[J + j])));
  return r;
}

void record(Trajectory& tr, double t, const Eigen::VectorXcd& u) {
  tr.times.push_back(t);
  tr.states.push_back(u);
  std::vector<double> n;
  for (double s : tr.s_list) n.push_back(hs_norm_x(u, s));
  tr.norms.push_back(std::move(n));
  tr.reality_defect = std::max(tr.reality_defect, reality_of(u));
}

}  // namespace

Trajectory evolve_full(const Eigen::VectorXcd& u0, const ToeplitzOperator& X, const std::vector<double>& omega,
                       const EvolveOptions& opt) {
  const Lattice& lat = X.lat;
  const int J = lat.j_max;
  if (u0.size() != lat.n_j()) throw Error("evolve_full: state and operator windows differ");
  if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) throw ConfigError("evolve_full: dt must be positive and T nonnegative");
  double speed = std::abs(opt.m) * omega_dp(J);
  for (double w : omega) speed = std::max(speed, std::abs(w));
  if (opt.dt * speed > opt.cfl_max)
    throw RefinementError("evolve_full: dt*max(|omega|, m omega(j_max)) = " + std::to_string(opt.dt * speed) +
                          " exceeds " + std::to_string(opt.cfl_max) + "; reduce dt below " +
                          std::to_string(opt.cfl_max / speed));
  // slabs that carry anything
  std::vector<std::size_t> live;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    if (X.slab(li).cwiseAbs().maxCoeff() > 0.0) live.push_back(li);

  Trajectory tr;
  tr.j_max = J;
  tr.s_list = opt.s_list;
  const long steps = std::lround(opt.T / opt.dt);
  const int every = std::max(1, opt.record_every);
  Eigen::VectorXcd u = u0;
  record(tr, 0.0, u);
  Eigen::MatrixXcd G(u.size(), u.size());
  for (long n = 0; n < steps; ++n) {
    const double tm = (n + 0.5) * opt.dt;
    G.setZero();
    for (std::size_t li : live) {
      double arg = 0.0;
      for (int d = 0; d < lat.nu; ++d) arg += lat.ell(li)[d] * omega[d] * tm;
      G += std::exp(cd(0.0, arg)) * X.slab(li);
    }
    // a diagonal generator (a = 0) is exponentiated entrywise so the flow stays unitary to rounding
    Eigen::MatrixXcd off = G;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() == 0.0) {
      for (Eigen::Index k = 0; k < u.size(); ++k) u[k] *= std::exp(opt.dt * G(k, k));
    } else {
      Eigen::MatrixXcd E = (opt.dt * G).exp();
      u = (E * u).eval();
    }
    if ((n + 1) % every == 0 || n + 1 == steps) record(tr, (n + 1) * opt.dt, u);
  }
  return tr;
}

Trajectory evolve_reduced(const Eigen::VectorXcd& u0, const PhaseMap& Phi, const std::vector<double>& d,
                          const std::vector<double>& omega, const std::vector<double>& times,
                          const std::vector<double>& s_list) {
  const int J = static_cast<int>(u0.size() - 1) / 2;
  if (static_cast<int>(d.size()) != u0.size()) throw Error("evolve_reduced: eigenvalue and state windows differ");
  Trajectory tr;
  tr.j_max = J;
  tr.s_list = s_list;
  const Eigen::VectorXcd v0 = Phi(std::vector<double>(omega.size(), 0.0)).first * u0;
  for (double t : times) {
    if (t == 0.0) {
      record(tr, t, u0);
      continue;
    }
    std::vector<double> phi(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) phi[i] = std::fmod(omega[i] * t, 2.0 * M_PI);
    Eigen::VectorXcd v = v0;
    for (int k = 0; k < v.size(); ++k) v[k] *= std::exp(cd(0.0, d[k] * t));
    record(tr, t, Phi(phi).second * v);
  }
  return tr;
}

Trajectory evolve_reduced(const Eigen::VectorXcd& u0, const Regularized& reg, const KamResult& kam,
                          const std::vector<double>& omega, const std::vector<double>& times,
                          const std::vector<double>& s_list) {
  const int J = kam.spectral.j_max;
  std::vector<double> d(2 * J + 1, 0.0);
  for (int j = -J; j <= J; ++j)
    if (j != 0) d[j + J] = kam.spectral.d(j);
  PhaseMap Phi = [&](const std::vector<double>& phi) { return diagonalizer_at(reg, kam, phi); };
  return evolve_reduced(u0, Phi, d, omega, times, s_list);
}

StabilityReport norm_stability_report(const Trajectory& traj, double s) {
  if (traj.states.empty()) throw Error("norm_stability_report: empty trajectory");
  const double n0 = hs_norm_x(traj.states.front(), s);
  if (n0 == 0.0) throw Error("norm_stability_report: zero initial datum, ratio undefined");
  StabilityReport r{1e300, -1e300};
  for (const auto& u : traj.states) {
    double q = hs_norm_x(u, s) / n0 - 1.0;
    r.c_lower = std::min(r.c_lower, q);
    r.c_upper = std::max(r.c_upper, q);
  }
  return r;
}

double trajectory_discrepancy(const Trajectory& a, const Trajectory& b, double s) {
  double worst = 0.0;
  std::size_t ib = 0;
  for (std::size_t ia = 0; ia < a.times.size(); ++ia) {
    while (ib < b.times.size() && b.times[ib] < a.times[ia] - 1e-9) ++ib;
    if (ib == b.times.size()) break;
    if (std::abs(b.times[ib] - a.times[ia]) > 1e-9) continue;
    double nb = hs_norm_x(b.states[ib], s);
    if (nb > 0.0) worst = std::max(worst, hs_norm_x(a.states[ia] - b.states[ib], s) / nb);
  }
  return worst;
}

}  // namespace qpr
