#include "qpr/egorov.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpr/errors.hpp"
#include "qpr/fft.hpp"

namespace qpr {

namespace {

// samples on an Nx grid of sum_{|j|<=J} c[j+J] e^{ijx}
std::vector<cd> synth(const cd* c, int J, int Nx) {
  std::vector<cd> g(Nx, cd(0.0));
  for (int j = -J; j <= J; ++j) g[wrap(j, Nx)] += c[j + J];
  dft(g.data(), {Nx}, 1, 1, 0, +1);
  return g;
}

// all Nx Fourier coefficients, frequency k at index wrap(k, Nx)
std::vector<cd> analyze(std::vector<cd> g) {
  const int Nx = static_cast<int>(g.size());
  dft(g.data(), {Nx}, 1, 1, 0, -1);
  for (auto& v : g) v /= static_cast<double>(Nx);
  return g;
}

// coefficients |j| <= J packed as [j + J]
std::vector<cd> pack(const std::vector<cd>& full, int J) {
  const int Nx = static_cast<int>(full.size());
  std::vector<cd> c(2 * J + 1, cd(0.0));
  for (int j = -J; j <= J; ++j)
    if (std::abs(j) < (Nx + 1) / 2) c[j + J] = full[wrap(j, Nx)];
  return c;
}

std::vector<cd> deriv_coeffs(const std::vector<cd>& full, int n) {
  const int Nx = static_cast<int>(full.size());
  std::vector<cd> r(full.size());
  for (int b = 0; b < Nx; ++b) {
    int k = freq(b, Nx);
    r[b] = (2 * std::abs(k) == Nx) ? cd(0.0) : full[b] * std::pow(I * static_cast<double>(k), n);
  }
  return r;
}

std::vector<cd> samples_of(std::vector<cd> full) {
  const int Nx = static_cast<int>(full.size());
  dft(full.data(), {Nx}, 1, 1, 0, +1);
  return full;
}

// beta and beta_x at each x node, from packed coefficients
void beta_samples(const cd* bc, int Jb, int Nx, std::vector<double>& b, std::vector<double>& bx) {
  std::vector<cd> dc(2 * Jb + 1);
  for (int j = -Jb; j <= Jb; ++j) dc[j + Jb] = I * static_cast<double>(j) * bc[j + Jb];
  auto g = synth(bc, Jb, Nx);
  auto gx = synth(dc.data(), Jb, Nx);
  b.resize(Nx);
  bx.resize(Nx);
  for (int k = 0; k < Nx; ++k) {
    b[k] = g[k].real();
    bx[k] = gx[k].real();
  }
}

double x_node(int k, int Nx) { return 2.0 * M_PI * k / Nx; }

void check_diffeo(const std::vector<double>& bx, double tau) {
  for (double v : bx)
    if (1.0 + tau * v <= 0.0 || std::abs(tau * v) >= 1.0)
      throw DiffeoError("x + tau*beta is not a diffeomorphism (sup|tau beta_x| >= 1)");
}

}  // namespace

ToeplitzOperator dp_operator(const TorusFunction& a, const ToeplitzOperator& Q, const Lattice& op) {
  ToeplitzOperator X(op);
  for (std::size_t li = 0; li < op.n_ell(); ++li) {
    std::size_t la = a.lat.index(op.ell(li));
    for (int j = -op.j_max; j <= op.j_max; ++j) {
      cd w = I * omega_dp(j);
      if (li == op.zero()) X.at(li, j, j) += w;
      if (la == Lattice::npos) continue;
      for (int jp = -op.j_max; jp <= op.j_max; ++jp) {
        int k = j - jp;
        if (std::abs(k) > a.lat.j_max) continue;
        X.at(li, j, jp) += w * a.at(la, k);
      }
    }
  }
  if (!Q.data.empty()) {
    if (Q.lat != op) throw Error("dp_operator: Q on a different truncation");
    X -= Q;
  }
  return X;
}

ToeplitzOperator order_minus_one_perturbation(const TorusFunction& c, const Lattice& op) {
  ToeplitzOperator Q(op);
  for (std::size_t li = 0; li < op.n_ell(); ++li) {
    std::size_t lc = c.lat.index(op.ell(li));
    if (lc == Lattice::npos) continue;
    for (int j = -op.j_max; j <= op.j_max; ++j)
      for (int jp = -op.j_max; jp <= op.j_max; ++jp) {
        int k = j - jp;
        if (std::abs(k) > c.lat.j_max) continue;
        Q.at(li, j, jp) = I * omega_dp(j) * c.at(lc, k) / (bracket_j(j) * bracket_j(jp));
      }
  }
  return Q;
}

ToeplitzOperator build_A_tau(const TorusFunction& beta, double tau, const Lattice& op) {
  if (beta.lat.nu != op.nu) throw Error("build_A_tau: nu mismatch");
  const int M = op_grid(op);
  const int n = op.n_j();
  const int Jb = beta.lat.j_max;
  const int Nx = fft_size(4 * n + 2 * Jb + 16);
  auto bn = phi_nodes(beta, M);
  OpGrid g = empty_grid(op, M);
  std::vector<cd> buf(static_cast<std::size_t>(Nx) * n);
  std::vector<double> b, bx;
  for (std::size_t node = 0; node < g.nodes; ++node) {
    beta_samples(&bn[node * beta.lat.n_j()], Jb, Nx, b, bx);
    check_diffeo(bx, tau);
    for (int k = 0; k < Nx; ++k) {
      double x = x_node(k, Nx);
      cd e = std::exp(I * (x + tau * b[k]));
      cd w = (1.0 + tau * bx[k]) * std::exp(-I * static_cast<double>(op.j_max) * (x + tau * b[k]));
      for (int jj = 0; jj < n; ++jj) {
        buf[static_cast<std::size_t>(k) * n + jj] = w;
        w *= e;
      }
    }
    dft(buf.data(), {Nx}, n, n, 1, -1);
    auto A = g.node(node);
    for (int j = -op.j_max; j <= op.j_max; ++j)
      for (int jj = 0; jj < n; ++jj) A(op.jj(j), jj) = buf[static_cast<std::size_t>(wrap(j, Nx)) * n + jj] / double(Nx);
  }
  return from_grid(std::move(g));
}

ToeplitzOperator build_A_tau_inverse(const TorusFunction& beta, double tau, const Lattice& op) {
  // the inverse has a wider x-spectrum than beta
  const Lattice& bl = beta.lat;
  Lattice wide(bl.nu, bl.l_max, std::max({4 * bl.j_max, op.j_max, 32}));
  InverseDiffeo inv = invert_diffeo(tau * beta.resized(wide));
  return build_A_tau(inv.beta_tilde, 1.0, op);
}

namespace {

struct FlowNode {
  Eigen::MatrixXcd P, Pi;
  double defect = 0.0;
};

// time-1 map at one phi node from the x-coefficients of beta there
FlowNode flow_node(const cd* bc, int Jb, int J, int n_steps) {
  const int n = 2 * J + 1;
  const int Nx = fft_size(2 * std::max(4 * J + 2, 2 * Jb + 2));
  std::vector<double> b, bx;
  beta_samples(bc, Jb, Nx, b, bx);
  check_diffeo(bx, 1.0);
  FlowNode r;
  r.P = Eigen::MatrixXcd::Identity(n, n);
  r.Pi = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd G(n, n);
  std::vector<cd> bt(Nx);
  const double h = 1.0 / n_steps;
  for (int s = 0; s < n_steps; ++s) {
    double tau = (s + 0.5) * h;
    for (int k = 0; k < Nx; ++k) bt[k] = b[k] / (1.0 + tau * bx[k]);
    auto bh = analyze(bt);
    for (int j = -J; j <= J; ++j)
      for (int jp = -J; jp <= J; ++jp) G(j + J, jp + J) = I * omega_dp(j) * bh[wrap(j - jp, Nx)];
    Eigen::MatrixXcd hG = h * G;
    Eigen::MatrixXcd E = hG.exp();
    Eigen::MatrixXcd mhG = -hG;
    Eigen::MatrixXcd Ei = mhG.exp();
    r.P = (E * r.P).eval();
    r.Pi = (r.Pi * Ei).eval();
  }
  // Omega(u, v) = u^T S v with S_{-j, j} = 1/(i omega(-j))
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  for (int j = -J; j <= J; ++j)
    if (j != 0) S(-j + J, j + J) = 1.0 / (I * omega_dp(-j));
  Eigen::MatrixXcd D = r.P.transpose() * S * r.P - S;
  for (int j = -J; j <= J; ++j)
    for (int jp = -J; jp <= J; ++jp)
      if (j != 0 && jp != 0) r.defect = std::max(r.defect, std::abs(D(j + J, jp + J)));
  return r;
}

}  // namespace

FlowResult flow_Psi(const TorusFunction& beta, const Lattice& op, const FlowOptions& opt) {
  if (opt.n_steps < 1) throw Error("flow_Psi: n_steps >= 1 required");
  if (beta.lat.nu != op.nu) throw Error("flow_Psi: nu mismatch");
  int M = opt.M > 0 ? opt.M : op_grid(op);
  FlowResult res;
  for (;;) {
    auto bn = phi_nodes(beta, M);
    res.Psi_grid = empty_grid(op, M);
    res.Psi_inv_grid = empty_grid(op, M);
    double defect = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : defect)
    for (long node = 0; node < static_cast<long>(res.Psi_grid.nodes); ++node) {
      FlowNode f = flow_node(&bn[node * beta.lat.n_j()], beta.lat.j_max, op.j_max, opt.n_steps);
      res.Psi_grid.node(node) = f.P;
      res.Psi_inv_grid.node(node) = f.Pi;
      defect = std::max(defect, f.defect);
    }
    res.symplectic_defect = defect;
    res.grid_tail = grid_tail(res.Psi_grid);
    int next = fft_size(2 * M);
    if (opt.M > 0 || res.grid_tail <= opt.tail_tol || grid_count(next, op.nu) > opt.max_nodes) break;
    M = next;
  }
  if (res.symplectic_defect > opt.symplectic_tol)
    throw ConvergenceError("flow_Psi: symplectic defect " + std::to_string(res.symplectic_defect) +
                               " above tolerance; increase the number of substeps",
                           {res.symplectic_defect});
  res.Psi = from_grid(res.Psi_grid);
  res.Psi_inv = from_grid(res.Psi_inv_grid);
  return res;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> flow_at(const TorusFunction& beta, const Lattice& op,
                                                      const std::vector<double>& phi, const FlowOptions& opt) {
  const Lattice& bl = beta.lat;
  std::vector<cd> bc(bl.n_j(), cd(0.0));
  for (std::size_t li = 0; li < bl.n_ell(); ++li) {
    double arg = 0.0;
    for (int d = 0; d < bl.nu; ++d) arg += bl.ell(li)[d] * phi[d];
    cd e = std::exp(I * arg);
    for (int j = -bl.j_max; j <= bl.j_max; ++j) bc[bl.jj(j)] += beta.at(li, j) * e;
  }
  FlowNode f = flow_node(bc.data(), bl.j_max, op.j_max, opt.n_steps);
  return {std::move(f.P), std::move(f.Pi)};
}

ToeplitzOperator weight_j(const ToeplitzOperator& A, double pl, double pr) {
  ToeplitzOperator r = A;
  const Lattice& lat = A.lat;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j)
      for (int jp = -lat.j_max; jp <= lat.j_max; ++jp)
        r.at(li, j, jp) *= std::pow(bracket_j(j), pl) * std::pow(bracket_j(jp), pr);
  return r;
}

Symbol fit_order_minus_one(const ToeplitzOperator& A, int k_max, int lo, int hi, double* rel_residual) {
  const Lattice& lat = A.lat;
  const int J = lat.j_max;
  k_max = std::max(0, std::min(k_max, J));
  Symbol t(Lattice(lat.nu, lat.l_max, k_max), -1.0, J);
  double worst = 0.0, scale = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int k = -k_max; k <= k_max; ++k)
      for (int sgn : {-1, 1}) {
        cd acc = 0.0;
        int cnt = 0;
        for (int xa = lo; xa <= hi; ++xa) {
          int xi = sgn * xa, j = xi + k;
          if (std::abs(j) > J || xa == 0) continue;
          acc += A.at(li, j, xi) * (I * static_cast<double>(xi));
          ++cnt;
        }
        cd tv = cnt ? acc / static_cast<double>(cnt) : cd(0.0);
        for (int xa = 1; xa <= J; ++xa) t.at(li, k, sgn * xa) = tv / (I * static_cast<double>(sgn * xa));
        for (int xa = lo; xa <= hi; ++xa) {
          int xi = sgn * xa, j = xi + k;
          if (std::abs(j) > J || xa == 0) continue;
          scale = std::max(scale, std::abs(A.at(li, j, xi)));
          worst = std::max(worst, std::abs(A.at(li, j, xi) - t.at(li, k, xi)));
        }
      }
  t.record_decay();
  if (rel_residual) *rel_residual = scale > 0 ? worst / scale : 0.0;
  return t;
}

double order_zero_defect(const ToeplitzOperator& A, int lo, int hi) {
  const Lattice& lat = A.lat;
  lo = std::max(lo, 1);
  hi = std::min(hi, lat.j_max);
  int rows = hi - lo + 1;
  if (rows < 4) throw Error("order_zero_defect: fewer than four fit points");
  Eigen::MatrixXd V(rows, 4);
  Eigen::VectorXd y(rows);
  for (int j = lo; j <= hi; ++j) {
    for (int p = 0; p < 4; ++p) V(j - lo, p) = std::pow(1.0 / j, p);
    y[j - lo] = (A.at(lat.zero(), j, j) / I).real();
  }
  Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
  return std::abs(c[0]);
}

FlowFactorization factorize_flow(const ToeplitzOperator& Psi, const TorusFunction& beta) {
  const Lattice& lat = Psi.lat;
  FlowFactorization f;
  f.A1 = build_A_tau(beta, 1.0, lat);
  f.A1_inv = build_A_tau_inverse(beta, 1.0, lat);
  f.C = compose(f.A1_inv, Psi);
  ToeplitzOperator CmI = f.C - ToeplitzOperator::identity(lat);
  const int J = lat.j_max;
  f.theta = fit_order_minus_one(CmI, std::max(1, J / 4), std::max(1, J / 2), std::max(1, 3 * J / 4),
                                &f.theta_fit_residual);
  f.half_weighted_norm = majorant_norm(weight_j(CmI, 0.5, 0.5), 0.0);
  ToeplitzOperator res = CmI - quantize(f.theta, J).resized(lat);
  f.residual_norm = majorant_norm(weight_j(res, 1.0, 0.0), 0.0);
  return f;
}

Symbol PolySymbol::to_symbol(int xi_window) const {
  if (terms.empty()) throw Error("PolySymbol: empty");
  const Lattice& lat = terms.begin()->second.lat;
  Symbol s(lat, order(), xi_window);
  for (const auto& [p, c] : terms) {
    if (c.lat != lat) throw Error("PolySymbol: terms on different truncations");
    for (int xi = -xi_window; xi <= xi_window; ++xi) {
      if (xi == 0 && p < 0) continue;
      cd f = std::pow(I * static_cast<double>(xi), p);
      for (std::size_t li = 0; li < lat.n_ell(); ++li)
        for (int k = -lat.j_max; k <= lat.j_max; ++k) s.at(li, k, xi) += c.at(li, k) * f;
    }
  }
  s.record_decay();
  return s;
}

namespace {

double binom(int a, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= static_cast<double>(a - i) / (i + 1);
  return r;
}

// zero the spectral tail below round-off, so high derivatives do not amplify noise
void trim_tail(std::vector<cd>& full, double rel = 1e-15) {
  double mx = 0.0;
  for (const auto& v : full) mx = std::max(mx, std::abs(v));
  for (auto& v : full)
    if (std::abs(v) <= rel * mx) v = 0.0;
}

struct NodeData {
  std::vector<cd> beta;  // packed, |j| <= Jb
  std::map<int, std::vector<cd>> w;  // packed initial coefficients per order
};

// packed coefficients of the samples g, cut to the band above round-off
std::vector<cd> trimmed_series(const std::vector<cd>& g, int& J) {
  auto full = analyze(g);
  const int Nx = static_cast<int>(full.size());
  trim_tail(full, 1e-17);
  J = 0;
  for (int b = 0; b < Nx; ++b)
    if (full[b] != cd(0.0) && 2 * std::abs(freq(b, Nx)) < Nx) J = std::max(J, std::abs(freq(b, Nx)));
  return pack(full, J);
}

// Chebyshev-Lobatto nodes on [0, 1] and W(i, k) = int_0^{t_i} l_k(t) dt for the Lagrange basis l_k
struct TimeQuadrature {
  std::vector<double> t;
  Eigen::MatrixXd W;
};

TimeQuadrature time_quadrature(int nc) {
  TimeQuadrature q;
  q.t.resize(nc + 1);
  std::vector<double> bw(nc + 1);
  for (int i = 0; i <= nc; ++i) {
    q.t[i] = 0.5 * (1.0 - std::cos(M_PI * i / nc));
    bw[i] = ((i % 2) ? -1.0 : 1.0) * ((i == 0 || i == nc) ? 0.5 : 1.0);
  }
  // Gauss-Legendre on [-1, 1] by Golub-Welsch, exact for the degree-nc integrands
  const int ng = nc / 2 + 2;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ng, ng);
  for (int i = 1; i < ng; ++i) T(i, i - 1) = T(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigen::VectorXd gx = es.eigenvalues();
  Eigen::VectorXd gw = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  q.W = Eigen::MatrixXd::Zero(nc + 1, nc + 1);
  std::vector<double> lk(nc + 1);
  for (int i = 1; i <= nc; ++i)
    for (int g = 0; g < ng; ++g) {
      double t = 0.5 * q.t[i] * (1.0 + gx[g]);
      double den = 0.0;
      for (int k = 0; k <= nc; ++k) den += (lk[k] = bw[k] / (t - q.t[k]));
      for (int k = 0; k <= nc; ++k) q.W(i, k) += 0.5 * q.t[i] * gw[g] * lk[k] / den;
    }
  return q;
}

// c_p(1, x) samples for one phi node
std::map<int, std::vector<cd>> egorov_node(const NodeData& nd, int Jb, int Jw, int top, int low, int Nx,
                                           const TimeQuadrature& tq) {
  std::vector<double> bv, bxv;
  beta_samples(nd.beta.data(), Jb, Nx, bv, bxv);
  check_diffeo(bxv, 1.0);
  std::vector<cd> bxc(2 * Jb + 1);
  for (int j = -Jb; j <= Jb; ++j) bxc[j + Jb] = I * static_cast<double>(j) * nd.beta[j + Jb];
  auto beta_at = [&](double z) { return eval_series(nd.beta.data(), Jb, z).real(); };
  auto betax_at = [&](double z) { return eval_series(bxc.data(), Jb, z).real(); };
  const int nc = static_cast<int>(tq.t.size()) - 1;
  const std::size_t nx = static_cast<std::size_t>(Nx);

  // characteristics: y_i = x + t_i beta(x); z_ik + t_k beta(z_ik) = y_i; ratio (1 + t_k beta_x(z)) / (1 + t_i beta_x(x))
  std::vector<double> Z((nc + 1) * (nc + 1) * nx), Rt((nc + 1) * (nc + 1) * nx);
  auto at = [&](int i, int k, int x) { return (static_cast<std::size_t>(i) * (nc + 1) + k) * nx + x; };
  for (int i = 0; i <= nc; ++i)
    for (int x = 0; x < Nx; ++x) {
      double y = x_node(x, Nx) + tq.t[i] * bv[x];
      double jt = 1.0 + tq.t[i] * bxv[x];
      double z = y;
      for (int k = 0; k <= nc; ++k) {
        double t = tq.t[k];
        for (int it = 0; it < 60; ++it) {
          double dz = (z + t * beta_at(z) - y) / (1.0 + t * betax_at(z));
          z -= dz;
          if (std::abs(dz) < 1e-15) break;
        }
        Z[at(i, k, x)] = z;
        Rt[at(i, k, x)] = (1.0 + t * betax_at(z)) / jt;
      }
    }

  // derivatives of b(t) = beta / (1 + t beta_x) at each time node
  std::vector<std::map<int, std::vector<cd>>> bder(nc + 1);
  std::vector<std::vector<cd>> bhat(nc + 1);
  for (int k = 0; k <= nc; ++k) {
    std::vector<cd> bt(Nx);
    for (int x = 0; x < Nx; ++x) bt[x] = bv[x] / (1.0 + tq.t[k] * bxv[x]);
    bhat[k] = analyze(bt);
    trim_tail(bhat[k]);
  }
  auto bd = [&](int k, int n) -> const std::vector<cd>& {
    auto it = bder[k].find(n);
    if (it == bder[k].end()) it = bder[k].emplace(n, samples_of(deriv_coeffs(bhat[k], n))).first;
    return it->second;
  };

  // c[p][i] = samples of c_p(t_i, .)
  std::map<int, std::vector<std::vector<cd>>> c;
  for (int p = top; p >= low; --p) {
    auto& tab = c[p];
    tab.assign(nc + 1, std::vector<cd>(Nx, cd(0.0)));
    auto w0 = nd.w.find(p);
    if (w0 != nd.w.end())
      for (int i = 0; i <= nc; ++i)
        for (int x = 0; x < Nx; ++x) {
          double y = x_node(x, Nx) + tq.t[i] * bv[x];
          tab[i][x] = eval_series(w0->second.data(), Jw, y) * std::pow(1.0 + tq.t[i] * bxv[x], -p);
        }
    if (p == top) continue;
    // forcing F_p(t_k, .) as trimmed series
    std::vector<std::vector<cd>> Fc(nc + 1);
    std::vector<int> FJ(nc + 1, 0);
    bool any = false;
    for (int k = 0; k <= nc; ++k) {
      std::vector<cd> F(Nx, cd(0.0));
      for (int n = 2; p + n - 1 <= top; ++n) {
        double C = binom(p + n - 1, n);
        if (C == 0.0) continue;
        const auto& cv = c.at(p + n - 1)[k];
        const auto& d = bd(k, n);
        for (int x = 0; x < Nx; ++x) F[x] -= C * cv[x] * d[x];
      }
      for (int n = 1; p + n <= top; ++n) {
        double C = binom(p + n, n);
        if (C == 0.0) continue;
        const auto& cv = c.at(p + n)[k];
        const auto& d = bd(k, n + 1);
        for (int x = 0; x < Nx; ++x) F[x] -= C * cv[x] * d[x];
      }
      Fc[k] = trimmed_series(F, FJ[k]);
      for (const auto& v : Fc[k]) any = any || v != cd(0.0);
    }
    if (!any) continue;
    for (int i = 1; i <= nc; ++i)
      for (int x = 0; x < Nx; ++x) {
        cd acc = 0.0;
        for (int k = 0; k <= nc; ++k) {
          double w = tq.W(i, k);
          if (w == 0.0) continue;
          acc += w * eval_series(Fc[k].data(), FJ[k], Z[at(i, k, x)]) * std::pow(Rt[at(i, k, x)], p);
        }
        tab[i][x] += acc;
      }
  }
  std::map<int, std::vector<cd>> res;
  for (int p = top; p >= low; --p) res[p] = c[p][nc];
  return res;
}

}  // namespace

EgorovSymbols egorov_transport(const PolySymbol& w, const TorusFunction& beta, int rho, const EgorovOptions& opt) {
  if (rho < 3) throw Error("egorov_transport: rho >= 3 required");
  if (w.terms.empty()) throw Error("egorov_transport: empty symbol");
  const Lattice& wl = w.terms.begin()->second.lat;
  if (wl.nu != beta.lat.nu) throw Error("egorov_transport: nu mismatch");
  if (sup_dx(beta) >= 1.0) throw DiffeoError("egorov_transport: sup|beta_x| >= 1");
  const int top = w.order();
  const int low = top - rho + 1;
  const int Jout = opt.j_out > 0 ? opt.j_out : wl.j_max;

  bool phi_free = true;
  auto check_free = [&](const TorusFunction& f) {
    for (std::size_t li = 0; li < f.lat.n_ell(); ++li)
      if (li != f.lat.zero())
        for (int j = -f.lat.j_max; j <= f.lat.j_max; ++j)
          if (f.at(li, j) != cd(0.0)) phi_free = false;
  };
  check_free(beta);
  for (const auto& [p, f] : w.terms) check_free(f);

  const int lmax = std::max(wl.l_max, beta.lat.l_max);
  Lattice out(wl.nu, lmax, Jout);
  Lattice work = phi_free ? Lattice(wl.nu, 0, Jout) : out;
  const int M = phi_free ? 1 : phi_grid(work);
  const int Nx = fft_size(std::max(2 * (2 * Jout + 1) + 1, 4 * wl.j_max + 4 * beta.lat.j_max + 8));

  TorusFunction bw = beta.resized(Lattice(wl.nu, phi_free ? 0 : lmax, beta.lat.j_max));
  auto bn = phi_nodes(bw, M);
  std::map<int, std::vector<cd>> wn;
  for (const auto& [p, f] : w.terms)
    wn[p] = phi_nodes(f.resized(Lattice(wl.nu, phi_free ? 0 : lmax, wl.j_max)), M);

  const std::size_t nodes = grid_count(M, wl.nu);
  const TimeQuadrature tq = time_quadrature(opt.cheb_nodes);
  std::map<int, std::vector<cd>> vals;
  for (int p = top; p >= low; --p) vals[p].assign(nodes * Nx, cd(0.0));
  const int nb = beta.lat.n_j(), nw = wl.n_j();
  for (std::size_t node = 0; node < nodes; ++node) {
    NodeData nd;
    nd.beta.assign(bn.begin() + node * nb, bn.begin() + (node + 1) * nb);
    for (const auto& [p, v] : wn) nd.w[p].assign(v.begin() + node * nw, v.begin() + (node + 1) * nw);
    auto r = egorov_node(nd, beta.lat.j_max, wl.j_max, top, low, Nx, tq);
    for (auto& [p, s] : r) std::copy(s.begin(), s.end(), vals[p].begin() + node * Nx);
  }
  EgorovSymbols res;
  res.rho = rho;
  for (int p = top; p >= low; --p) {
    TorusFunction cp = from_grid(std::move(vals[p]), work, M, Nx);
    res.q.terms[p] = cp.resized(out);
  }
  return res;
}

Regularized regularize(const TorusFunction& a, const ToeplitzOperator& Q, const FrequencyConfig& freq,
                       const Lattice& op, const RegularizeOptions& opt) {
  Regularized r;
  r.straight = straighten_iterate(a, freq, opt.straighten);
  r.m = r.straight.m;
  const TorusFunction& beta = r.straight.beta;
  const TorusFunction& bt = r.straight.beta_tilde;

  // transported transport coefficient m + a_+ = ((1+a)(1+bt_x) - omega.d bt) o (id + beta)
  {
    Lattice wide(a.lat.nu, std::max(a.lat.l_max, bt.lat.l_max), 2 * std::max(a.lat.j_max, bt.lat.j_max));
    TorusFunction one(wide);
    one.at(wide.zero(), 0) = 1.0;
    TorusFunction btw = bt.resized(wide);
    TorusFunction f = pointwise_product(one + a.resized(wide), one + dx(btw)) - omega_dphi(btw, freq.omega);
    TorusFunction g = compose_diffeo(f, beta.resized(wide), 1.0);
    g.at(wide.zero(), 0) -= r.m;
    r.transport_defect = sup_norm(g);
    if (r.transport_defect > opt.transport_tol)
      throw ConvergenceError("regularize: transported coefficient is not constant (defect " +
                                 std::to_string(r.transport_defect) + "), straightening mismatch",
                             {r.transport_defect});
  }

  r.X = dp_operator(a, Q, op);
  r.X.drop_zero_mode();
  FlowResult flow = flow_Psi(beta, op, opt.flow);
  r.symplectic_defect = flow.symplectic_defect;
  const int M = flow.Psi_grid.M;
  {
    OpGrid gd = omega_dphi(flow.Psi_inv_grid, freq.omega);
    OpGrid gx = to_grid(r.X, M);
    OpGrid K = empty_grid(op, M);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < static_cast<long>(K.nodes); ++k) {
      Eigen::MatrixXcd T = gd.node(k);
      T.noalias() -= gx.node(k) * flow.Psi_inv_grid.node(k);
      K.node(k).noalias() = flow.Psi_grid.node(k) * T;
    }
    r.R = from_grid(std::move(K));
  }
  for (int j = -op.j_max; j <= op.j_max; ++j) r.R.at(op.zero(), j, j) += r.m * I * omega_dp(j);
  r.R.drop_zero_mode();
  r.Phi1 = flow.Psi;
  r.Phi1_inv = flow.Psi_inv;
  r.Phi1.drop_zero_mode();
  r.Phi1_inv.drop_zero_mode();
  r.flow = std::move(flow);
  r.flow_options = opt.flow;

  r.structure = structure_check(r.R, opt.structure_tol);
  if (!r.structure.is_hamiltonian)
    throw StructureError("regularize: conjugated operator lost Hamiltonian structure (reality defect " +
                         std::to_string(r.structure.reality_defect) + ", hamiltonian defect " +
                         std::to_string(r.structure.hamiltonian_defect) + ")");
  const int J = op.j_max;
  if (J >= 8) {
    r.order0_defect = order_zero_defect(r.R, 3, std::max(6, 3 * J / 4));
    r.r_symbol = fit_order_minus_one(r.R, std::max(1, J / 4), J / 2, 3 * J / 4, &r.r_fit_residual);
  }
  r.half_weighted_norm = majorant_norm(weight_j(r.R, 0.5, 0.5), 0.0);
  if (opt.diagnostics) r.smoothing = smoothing_constants(r.R, opt.rho, 0, {double(SobolevIndex::s0(op.nu))});
  return r;
}

}  // namespace qpr
