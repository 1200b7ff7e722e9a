#include "qpr/kam.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpr/errors.hpp"

namespace qpr {

KamParams KamParams::standard(int nu, double gamma, int N0, int k_max) {
  KamParams p;
  p.nu = nu;
  p.gamma = gamma;
  p.tau = 2.0 * nu + 6.0;
  p.b0 = 6.0 * p.tau + 6.0;
  p.a_exp = 6.0 * p.tau + 4.0;
  p.tau1 = 2.0 * p.tau + 2.0;
  p.N0 = N0;
  p.k_max = k_max;
  return p;
}

int KamParams::N(int k) const {
  if (k < 0) return 1;
  return static_cast<int>(std::lround(std::pow(static_cast<double>(N0), std::pow(1.5, k))));
}

void KamParams::validate() const {
  if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("kam.gamma must lie in (0, 1)");
  if (N0 < 2) throw ConfigError("kam.N0 must be at least 2");
  if (k_max < 0) throw ConfigError("kam.k_max must be nonnegative");
  if (floor <= 0.0 || series_tol <= 0.0 || proxy_max <= 0.0) throw ConfigError("kam tolerances must be positive");
  if (!overridden && std::abs(tau - (2.0 * nu + 6.0)) > 1e-12)
    throw ConfigError("kam.tau must equal 2 nu + 6 unless overridden");
}

double SpectralData::oddness_defect() const {
  double r0 = 0.0;
  for (int j = 1; j <= j_max; ++j) r0 = std::max(r0, std::abs(r_of(j) + r_of(-j)));
  return r0;
}

double SpectralData::weighted_sup() const {
  double r0 = 0.0;
  for (int j = -j_max; j <= j_max; ++j)
    if (j != 0) r0 = std::max(r0, bracket_j(j) * std::abs(r_of(j)));
  return r0;
}

namespace {

double omega_l1(const std::vector<double>& omega) {
  double s = 0.0;
  for (double w : omega) s += std::abs(w);
  return s;
}

SpectralData spectral_from(const std::vector<double>& e, double m, int J) {
  SpectralData sd;
  sd.m = m;
  sd.j_max = J;
  sd.r.assign(2 * J + 1, 0.0);
  for (int j = -J; j <= J; ++j)
    if (j != 0) sd.r[j + J] = -e[j + J] - m * omega_dp(j);
  return sd;
}

// [A, T] with A given on the grid
ToeplitzOperator commutator_with(const OpGrid& ga, const ToeplitzOperator& T) {
  OpGrid gt = to_grid(T, ga.M);
  OpGrid c = empty_grid(T.lat, ga.M);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(c.nodes); ++k) {
    c.node(k).noalias() = ga.node(k) * gt.node(k);
    c.node(k).noalias() -= gt.node(k) * ga.node(k);
  }
  return from_grid(std::move(c));
}

}  // namespace

ResonanceScan melnikov_second(const std::vector<double>& omega, const SpectralData& d, double gamma, double tau,
                              int N, bool prune) {
  const int nu = static_cast<int>(omega.size());
  const int J = d.j_max;
  const double eta = std::pow(gamma, 1.5);
  const double wn = 8.0 * omega_l1(omega);
  Lattice box(nu, N, 0);
  ResonanceScan r;
  r.margin = std::numeric_limits<double>::infinity();
  for (std::size_t li = 0; li < box.n_ell(); ++li) {
    int l1 = box.ell_l1(li);
    double wl = box.omega_dot(omega, li);
    double bound = eta * std::pow(bracket_l(l1), -tau);
    for (int j = -J; j <= J; ++j) {
      if (j == 0) continue;
      for (int jp = -J; jp <= J; ++jp) {
        if (jp == 0 || (l1 == 0 && j == jp)) continue;
        if (prune && std::abs(omega_dp(j) - omega_dp(jp)) > wn * l1) continue;
        double div = wl + d.d(j) - d.d(jp);
        double margin = std::abs(div) / bound;
        if (margin < r.margin) {
          r.margin = margin;
          r.ell.assign(box.ell(li), box.ell(li) + nu);
          r.j = j;
          r.jp = jp;
          r.divisor = div;
          r.bound = bound;
        }
      }
    }
  }
  r.ok = r.margin > 1.0;
  return r;
}

ToeplitzOperator homological_solve(const ToeplitzOperator& P, const std::vector<double>& omega,
                                   const std::vector<double>& e, double eta, double tau, int N,
                                   double* identity_residual, double s) {
  const Lattice& lat = P.lat;
  const int J = lat.j_max;
  ToeplitzOperator A(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    int l1 = lat.ell_l1(li);
    if (l1 > N) continue;
    double wl = lat.omega_dot(omega, li);
    double bound = eta * std::pow(bracket_l(l1), -tau);
    for (int j = -J; j <= J; ++j)
      for (int jp = -J; jp <= J; ++jp) {
        if (l1 == 0 && j == jp) continue;
        cd p = P.at(li, j, jp);
        if (j == 0 || jp == 0) {
          if (p != cd(0.0)) throw Error("homological_solve: P acts on the zero mode");
          continue;
        }
        double div = wl + e[j + J] - e[jp + J];
        if (std::abs(div) < bound) {
          std::vector<int> l(lat.ell(li), lat.ell(li) + lat.nu);
          throw SmallDivisorError("homological_solve: small divisor " + std::to_string(div) + " at j=" +
                                      std::to_string(j) + ", j'=" + std::to_string(jp) +
                                      " violates the second Melnikov condition",
                                  l, j, jp, div);
        }
        A.at(li, j, jp) = p / (I * div);
      }
  }
  if (identity_residual) {
    ToeplitzOperator lhs = omega_dphi(A, omega);
    for (std::size_t li = 0; li < lat.n_ell(); ++li)
      for (int j = -J; j <= J; ++j)
        for (int jp = -J; jp <= J; ++jp) lhs.at(li, j, jp) += I * (e[j + J] - e[jp + J]) * A.at(li, j, jp);
    ToeplitzOperator rhs = project_and_weight(P, Projection::Low, N) - diagonal_average(P);
    *identity_residual = majorant_norm(lhs - rhs, s);
  }
  return A;
}

OpGrid exp_grid(const ToeplitzOperator& A, int M, double sign) {
  OpGrid g = to_grid(A, M);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(g.nodes); ++k) {
    Eigen::MatrixXcd a = sign * g.node(k);
    g.node(k) = a.exp();
  }
  return g;
}

KamStep kam_step(const std::vector<double>& e, const ToeplitzOperator& P, const std::vector<double>& omega,
                 const KamParams& params, int N, double s) {
  const Lattice& lat = P.lat;
  const int J = lat.j_max;
  KamStep st;
  ToeplitzOperator avg = diagonal_average(P);
  st.e_plus = e;
  for (int j = -J; j <= J; ++j)
    if (j != 0) st.e_plus[j + J] += (avg.at(lat.zero(), j, j) / I).real();
  st.A = homological_solve(P, omega, e, std::pow(params.gamma, 1.5), params.tau, N, &st.identity_residual, s);
  st.generator_norm = schur_bound(st.A);
  if (st.generator_norm >= params.proxy_max)
    throw SmallnessError("kam_step: generator norm " + std::to_string(st.generator_norm) +
                         " exceeds the smallness proxy " + std::to_string(params.proxy_max) +
                         "; the KAM smallness condition fails (reduce epsilon or N0)");

  // P+ = Pi_N^perp P + sum_k ad^k(P)/k! - sum_k ad^k(Y)/(k+1)!, Y = Pi_N P - [P]
  ToeplitzOperator Y = project_and_weight(P, Projection::Low, N) - avg;
  st.P_plus = project_and_weight(P, Projection::High, N);
  if (st.A.max_abs() > 0.0) {
    OpGrid ga = to_grid(st.A, op_grid(lat));
    ToeplitzOperator tp = P, ty = Y;
    double scale = std::max(schur_bound(P), 1e-300);
    bool converged = false;
    for (int k = 1; k <= params.series_max; ++k) {
      tp = commutator_with(ga, tp);
      tp *= cd(1.0 / k);
      ty = commutator_with(ga, ty);
      ty *= cd(1.0 / (k + 1));
      st.P_plus += tp;
      st.P_plus -= ty;
      st.series_terms = k;
      if (std::max(schur_bound(tp), schur_bound(ty)) < params.series_tol * scale) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw SmallnessError("kam_step: Lie series did not converge in " + std::to_string(params.series_max) +
                           " terms; the generator is too large for the KAM smallness condition");
  }
  st.P_plus.drop_zero_mode();
  StructureReport sr = structure_check(st.P_plus);
  st.structure_defect = std::max(sr.reality_defect, sr.hamiltonian_defect);
  return st;
}

KamResult kam_iterate(const ToeplitzOperator& R, double m, const std::vector<double>& omega, const KamParams& params) {
  params.validate();
  const Lattice& lat = R.lat;
  const int J = lat.j_max;
  const double s0 = SobolevIndex::s0(lat.nu);
  KamResult res;
  std::vector<double> e(2 * J + 1, 0.0);
  for (int j = -J; j <= J; ++j)
    if (j != 0) e[j + J] = -m * omega_dp(j);
  ToeplitzOperator P = R;
  P.drop_zero_mode();
  res.stop_reason = "k_max";
  for (int k = 0;; ++k) {
    // absorb [P] so that P is off-diagonal
    ToeplitzOperator avg = diagonal_average(P);
    for (int j = -J; j <= J; ++j)
      if (j != 0) e[j + J] += (avg.at(lat.zero(), j, j) / I).real();
    P -= avg;
    res.spectral.history.push_back(spectral_from(e, m, J).r);

    KamTraceEntry te;
    te.k = k;
    te.N = params.N(k);
    te.offdiag_norm = P.max_abs() > 0.0 ? majorant_norm(P, s0) : 0.0;
    StructureReport sr = structure_check(P);
    te.structure_defect = std::max(sr.reality_defect, sr.hamiltonian_defect);
    te.smallness = std::pow(params.gamma, -1.5) * std::pow(double(te.N), 2.0 * params.tau + 2.0) * te.offdiag_norm;
    res.final_norm = te.offdiag_norm;
    if (te.offdiag_norm < params.floor) {
      res.trace.push_back(te);
      res.stop_reason = "floor";
      break;
    }
    if (k >= params.k_max) {
      res.trace.push_back(te);
      break;
    }
    ResonanceScan scan = melnikov_second(omega, spectral_from(e, m, J), params.gamma, params.tau,
                                         std::min(te.N, lat.l_max));
    te.melnikov_margin_min = scan.margin;
    if (!scan) {
      res.trace.push_back(te);
      res.excluded = true;
      res.violation = scan;
      res.stop_reason = "melnikov";
      break;
    }
    KamStep st = kam_step(e, P, omega, params, te.N, s0);
    te.identity_residual = st.identity_residual;
    te.generator_norm = st.generator_norm;
    te.series_terms = st.series_terms;
    res.trace.push_back(te);
    e = st.e_plus;
    P = std::move(st.P_plus);
    res.generators.push_back(std::move(st.A));
  }
  res.spectral = [&] {
    SpectralData sd = spectral_from(e, m, J);
    sd.history = std::move(res.spectral.history);
    return sd;
  }();
  res.P_final = P;

  // Phi2 = exp(A_K) ... exp(A_0)
  const int M = op_grid(lat);
  OpGrid f = to_grid(ToeplitzOperator::identity(lat), M), fi = f;
  for (const auto& A : res.generators) {
    OpGrid q = exp_grid(A, M, 1.0), qi = exp_grid(A, M, -1.0);
    for (std::size_t k = 0; k < f.nodes; ++k) {
      f.node(k) = (q.node(k) * f.node(k)).eval();
      fi.node(k) = (fi.node(k) * qi.node(k)).eval();
    }
  }
  res.Phi2 = from_grid(std::move(f));
  res.Phi2_inv = from_grid(std::move(fi));

  // slope of log|P_k| against log N_{k-1} over the executed steps
  std::vector<double> xs, ys;
  for (const auto& t : res.trace)
    if (t.k >= 1 && t.offdiag_norm > 0.0) {
      xs.push_back(std::log(double(params.N(t.k - 1))));
      ys.push_back(std::log(t.offdiag_norm));
    }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    res.decay_slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  return res;
}

FullDiagonalizer assemble_full_diagonalizer(const Regularized& reg, const KamResult& kam,
                                            const std::vector<double>& omega) {
  const Lattice& op = reg.R.lat;
  const int J = op.j_max;
  const OpGrid& psi = reg.flow.Psi_grid;
  const OpGrid& psii = reg.flow.Psi_inv_grid;
  const int M = psi.M;
  FullDiagonalizer fd;
  fd.grid = M;

  OpGrid phi = psi, phii = psii;
  for (const auto& A : kam.generators) {
    OpGrid q = exp_grid(A, M, 1.0), qi = exp_grid(A, M, -1.0);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < static_cast<long>(phi.nodes); ++k) {
      phi.node(k) = (q.node(k) * phi.node(k)).eval();
      phii.node(k) = (phii.node(k) * qi.node(k)).eval();
    }
  }
  fd.Phi = from_grid(phi);
  fd.Phi_inv = from_grid(phii);
  fd.Phi.drop_zero_mode();
  fd.Phi_inv.drop_zero_mode();

  // Phi (omega.d Phi^{-1}) - Phi X Phi^{-1} - diag(i e_j), e_j = -d_j
  OpGrid dphii = omega_dphi(phii, omega);
  OpGrid gx = to_grid(reg.X, M);
  OpGrid K = empty_grid(op, M);
  const SpectralData& sd = kam.spectral;
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(K.nodes); ++k) {
    Eigen::MatrixXcd T = dphii.node(k);
    T.noalias() -= gx.node(k) * phii.node(k);
    K.node(k).noalias() = phi.node(k) * T;
    for (int j = -J; j <= J; ++j)
      if (j != 0) K.node(k)(op.jj(j), op.jj(j)) += I * sd.d(j);
  }
  // keep the whole resolved spectrum of the residual
  K.lat = Lattice(op.nu, std::max(op.l_max, (M - 1) / 2), J);
  ToeplitzOperator res = from_grid(std::move(K));
  res.drop_zero_mode();
  const double s0 = SobolevIndex::s0(op.nu);
  fd.residual_full = majorant_norm(res, s0);
  MajorantOptions mo;
  mo.s = s0;
  mo.l_window = op.l_max / 2;
  mo.j_window = J / 2;
  fd.residual_interior = majorant_norm(res, mo);
  return fd;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> diagonalizer_at(const Regularized& reg, const KamResult& kam,
                                                              const std::vector<double>& phi) {
  auto [P, Pi] = flow_at(reg.straight.beta, reg.R.lat, phi, reg.flow_options);
  for (const auto& A : kam.generators) {
    Eigen::MatrixXcd a = evaluate_at(A, phi);
    Eigen::MatrixXcd ma = -a;
    P = (a.exp() * P).eval();
    Pi = (Pi * ma.exp()).eval();
  }
  return {std::move(P), std::move(Pi)};
}

}  // namespace qpr
