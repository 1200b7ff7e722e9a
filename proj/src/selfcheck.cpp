#include "qpr/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qpr/config.hpp"
#include "qpr/errors.hpp"
#include "qpr/evolution.hpp"
#include "qpr/pipeline.hpp"

namespace qpr {

bool SelfCheckReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

using Rng = std::mt19937_64;

struct Suite {
  SelfCheckReport report;
  // pass when value <= threshold
  void le(const char* module, const char* name, double value, double threshold) {
    report.checks.push_back({module, name, value, threshold, value <= threshold});
  }
  void in(const char* module, const char* name, double value, double lo, double hi) {
    report.checks.push_back({module, name, value, hi, value >= lo && value <= hi});
  }
};

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// real random function with |u_{l j}| ~ <l, j>^{-p}, supported on |l|_1 <= lk, |j| <= jk
TorusFunction random_real(const Lattice& lat, Rng& rng, double amp, double p, int lk = 1 << 20, int jk = 1 << 20) {
  TorusFunction u(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    if (lat.ell_l1(li) > lk) continue;
    for (int j = -std::min(jk, lat.j_max); j <= std::min(jk, lat.j_max); ++j)
      u.at(li, j) = amp * cd(normal(rng), normal(rng)) * std::pow(bracket(lat.ell_l1(li), j), -p);
  }
  u.enforce_reality();
  return u;
}

Symbol random_symbol(const Lattice& lat, double order, int Xi, Rng& rng) {
  Symbol a(lat, order, Xi);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int k = -lat.j_max; k <= lat.j_max; ++k)
      for (int xi = -Xi; xi <= Xi; ++xi)
        a.at(li, k, xi) = cd(normal(rng), normal(rng)) * std::pow(bracket_j(xi), order) *
                          std::pow(bracket(lat.ell_l1(li), k), -2.0);
  a.record_decay();
  return a;
}

// sum over Z^{nu+1} of <l, j>^{-2 s}; shells of max(|l|_1, |j|) = n
double lattice_zeta(int nu, double s) {
  auto ball = [nu](int n) {
    // #{l in Z^nu : |l|_1 <= n}
    std::vector<double> c(n + 1, 1.0);
    for (int d = 1; d < nu; ++d) {
      std::vector<double> nx(n + 1, 0.0);
      for (int r = 0; r <= n; ++r)
        for (int t = -r; t <= r; ++t) nx[r] += c[r - std::abs(t)];
      c = nx;
    }
    double tot = 0.0;
    for (int t = -n; t <= n; ++t) tot += c[n - std::abs(t)];
    return tot;
  };
  const int nmax = 2000;
  double acc = 1.0, prev = 1.0;  // n = 0 shell
  for (int n = 1; n <= nmax; ++n) {
    double cnt = ball(n) * (2.0 * n + 1.0);
    acc += (cnt - prev) * std::pow(double(n), -2.0 * s);
    prev = cnt;
  }
  // tail: shell size <= C n^nu with the last shell's constant
  double c_last = prev / std::pow(double(nmax), nu + 1);
  acc += c_last * (nu + 1) * std::pow(double(nmax), nu + 1 - 2.0 * s) / (2.0 * s - nu - 1);
  return acc;
}

// Omega(u, v) = sum_{j != 0} u_{-j} v_j / (i omega(-j)) on x-vectors
cd omega_form(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  const int J = static_cast<int>(u.size() - 1) / 2;
  cd acc = 0.0;
  for (int j = -J; j <= J; ++j)
    if (j != 0) acc += u[J - j] * v[J + j] / (I * omega_dp(-j));
  return acc;
}

FrequencyConfig freq1() {
  FrequencyConfig f;
  f.nu = 1;
  f.L = 1.0;
  f.gamma = 0.1;
  f.tau = 8.0;
  f.omega = golden_omega(1, 1.0);
  return f;
}

void core_fourier(Suite& S, Rng& rng) {
  const Lattice lat(1, 6, 12);
  const int s0 = SobolevIndex::s0(1);
  const double s = s0 + 2.0;
  double reality = 0.0, tame = 0.0;
  for (int t = 0; t < 24; ++t) {
    TorusFunction u = random_real(lat, rng, 1.0, 1.0 + (t % 4)), v = random_real(lat, rng, 1.0, 1.0 + (t / 6));
    TorusFunction w = pointwise_product(u, v);
    reality = std::max(reality, w.reality_defect());
    tame = std::max(tame, sobolev_norm(w, s) / (sobolev_norm(u, s) * sobolev_norm(v, s0) +
                                                 sobolev_norm(u, s0) * sobolev_norm(v, s)));
  }
  TorusFunction beta = random_real(lat, rng, 0.01, 3.0, 1, 2);
  reality = std::max(reality, compose_diffeo(random_real(lat, rng, 1.0, 2.0), beta, 1.0).reality_defect());
  S.le("core-fourier", "reality of products and compositions", reality, 1e-13);
  // Young plus Cauchy-Schwarz with the subadditive weight: C(s) <= 2^{s-1} (sum <a>^{-2 s0})^{1/2}
  S.le("core-fourier", "tame product constant within the analytic bound", tame,
       std::pow(2.0, s - 1.0) * std::sqrt(lattice_zeta(1, s0)));

  // wide enough that the inverse map is resolved in l and j
  const Lattice wide(1, 14, 48);
  TorusFunction u = random_real(wide, rng, 1.0, 2.0, 1, 4);
  TorusFunction b = random_real(wide, rng, 0.01, 2.0, 1, 2);
  InverseDiffeo inv = invert_diffeo(b);
  TorusFunction back = compose_diffeo(compose_diffeo(u, b, 1.0), inv.beta_tilde, 1.0);
  S.le("core-fourier", "diffeomorphism round trip", sup_norm(back - u), 1e-9);

  TorusFunction r = random_real(lat, rng, 1.0, 1.5);
  double worst = -1e300;
  for (double a = 0.0; a < 8.0; a += 0.5) worst = std::max(worst, sobolev_norm(r, a) - sobolev_norm(r, a + 0.5));
  S.le("core-fourier", "sobolev norm monotone in s", worst, 0.0);
}

void symbol_calculus(Suite& S, Rng& rng) {
  const Lattice sl(1, 1, 3);
  const int Xi = 40, W = 16;
  double exact = 0.0, expansion = 0.0;
  for (int t = 0; t < 5; ++t) {
    Symbol a = random_symbol(sl, 1.0, Xi, rng), b = random_symbol(sl, -1.0, Xi, rng);
    // operator product with the inner index summed over everything it reaches
    const int Jb = W + 2 * sl.j_max;
    ToeplitzOperator A = quantize(a, Jb), B = quantize(b, Jb);
    ToeplitzOperator C = quantize(compose_exact(a, b), W);
    double scale = 0.0, err = 0.0;
    const Lattice& cl = C.lat;
    for (std::size_t lc = 0; lc < cl.n_ell(); ++lc)
      for (int j = -W; j <= W; ++j)
        for (int jp = -W; jp <= W; ++jp) {
          cd acc = 0.0;
          for (std::size_t l1 = 0; l1 < A.lat.n_ell(); ++l1) {
            std::vector<int> l2v{cl.ell(lc)[0] - A.lat.ell(l1)[0]};
            std::size_t l2 = B.lat.index(l2v);
            if (l2 == Lattice::npos) continue;
            for (int m = -Jb; m <= Jb; ++m) acc += A.at(l1, j, m) * B.at(l2, m, jp);
          }
          scale = std::max(scale, std::abs(acc));
          err = std::max(err, std::abs(acc - C.at(lc, j, jp)));
        }
    exact = std::max(exact, err / scale);
    Symbol ex = compose_exact(a, b);
    for (int N = 1; N <= 4; ++N) {
      auto [e, r] = compose_asymptotic(a, b, N);
      expansion = std::max(expansion, max_abs((e + r) - ex) / max_abs(ex));
    }
  }
  S.le("symbol-calculus", "quantize(a#b) = Op(a)Op(b)", exact, 1e-12);
  S.le("symbol-calculus", "expansion plus remainder = a#b", expansion, 1e-12);

  // remainder order on separable symbols: <xi>^{N - m - m'} |r_N| stays bounded up to the window edge
  const Lattice xl(1, 0, 3);
  const int Xr = 160;
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(xl.n_j()), h = g;
  for (int k = -3; k <= 3; ++k) {
    g[xl.jj(k)] = cd(normal(rng), normal(rng)) * std::pow(2.0, -std::abs(k));
    h[xl.jj(k)] = cd(normal(rng), normal(rng)) * std::pow(2.0, -std::abs(k));
  }
  Symbol a = separable(xl, 1.0, Xr, g, [](int xi) { return cd(std::sqrt(1.0 + double(xi) * xi)); });
  Symbol b = separable(xl, -1.0, Xr, h, [](int xi) { return cd(1.0 / std::sqrt(1.0 + double(xi) * xi)); });
  double worst = 0.0;
  for (int N = 1; N <= 3; ++N) {
    auto rem = compose_asymptotic(a, b, N).second;
    auto weighted = [&](int xi) { return slice_max(rem, xi) * std::pow(double(xi), double(N)); };
    double inner = 0.0;
    for (int xi = 20; xi <= rem.valid / 2; ++xi) inner = std::max(inner, weighted(xi));
    worst = std::max(worst, weighted(rem.valid) / inner);
  }
  S.le("symbol-calculus", "remainder bounded by <xi>^{m+m'-N} (edge over interior ratio)", worst, 2.0);

  ToeplitzOperator Jop = quantize(j_symbol(Lattice(1, 0, 0), 24), 24);
  Eigen::MatrixXcd Jd = Jop.slab(0);
  S.le("symbol-calculus", "J skew-adjoint", (Jd + Jd.adjoint()).cwiseAbs().maxCoeff(), 0.0);
}

ToeplitzOperator random_operator(const Lattice& lat, Rng& rng, double decay) {
  ToeplitzOperator A(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j)
      for (int jp = -lat.j_max; jp <= lat.j_max; ++jp)
        A.at(li, j, jp) =
            cd(normal(rng), normal(rng)) * std::pow(bracket(lat.ell_l1(li), j - jp), -decay) / (1.0 + std::abs(j) + std::abs(jp));
  return A;
}

void toeplitz(Suite& S, Rng& rng) {
  const Lattice lat(1, 3, 8);
  double mono = 0.0, sub = -1e300;
  for (int t = 0; t < 4; ++t) {
    ToeplitzOperator A = random_operator(lat, rng, 2.0);
    ToeplitzOperator B = A;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (auto& x : B.data) x *= 1.0 + U(rng);
    mono = std::max(mono, majorant_norm(A, 2.0) / majorant_norm(B, 2.0));
    ToeplitzOperator C = random_operator(lat, rng, 2.0);
    ProbeFamily pf;
    pf.seed = static_cast<unsigned>(rng());
    double ca = modulo_tame_constant(A, 4.0, 1.0, pf).value(), cc = modulo_tame_constant(C, 4.0, 1.0, pf).value();
    double cs = modulo_tame_constant(A + C, 4.0, 1.0, pf).value();
    sub = std::max(sub, cs / (ca + cc));
  }
  S.le("qp-operator", "majorant norm monotone under entrywise order", mono, 1.0 + 1e-6);
  S.le("qp-operator", "modulo-tame constant subadditive", sub, 1.0 + 1e-9);
  TorusFunction a = random_real(lat, rng, 0.01, 2.0);
  a.at(lat.zero(), 0) = 0.0;
  auto rep = structure_check(dp_operator(a, ToeplitzOperator(), lat));
  S.le("qp-operator", "J o (1+a) real and Hamiltonian", std::max(rep.reality_defect, rep.hamiltonian_defect), 1e-12);
}

void straightening(Suite& S, Rng& rng) {
  const Lattice lat(1, 6, 16);
  FrequencyConfig f = freq1();
  TorusFunction a = random_real(lat, rng, 2e-3, 3.0, 3, 3);
  a.at(lat.zero(), 0) = 0.0;
  const double m = 1.0;
  TorusFunction beta = transport_homological_solve(a, f.omega, m, f.gamma, f.tau);
  TorusFunction lhs = omega_dphi(beta, f.omega) - m * dx(beta);
  TorusFunction rhs = a;
  for (std::size_t li = 0; li < lat.n_ell(); ++li) rhs.at(li, 0) = 0.0;
  S.le("straightening", "homological solve substitution", sup_norm(lhs - rhs) / sup_norm(rhs), 1e-13);
  S.le("straightening", "beta real for real a", beta.reality_defect(), 1e-15);

  double C = 0.0, newton = 0.0;
  for (int t = 0; t < 4; ++t) {
    TorusFunction ak = random_real(lat, rng, 5e-3 * (t + 1), 3.0, 2, 2);
    auto st = straighten_iterate(ak, f);
    C = std::max(C, std::abs(st.m - 1.0) / sobolev_norm(ak, SobolevIndex::s0(1)));
    for (std::size_t k = 0; k + 1 < st.history.size(); ++k)
      if (st.history[k + 1] > 1e-13) newton = std::max(newton, st.history[k + 1] / std::pow(st.history[k], 2.0));
  }
  S.le("straightening", "|m - 1| / ||a||_{s0}", C, 1.0);
  S.le("straightening", "quadratic decrease of the straightening defect", newton, 1e3);

  const Lattice wide(1, 14, 32);
  TorusFunction b = random_real(wide, rng, 0.01, 3.0, 1, 2);
  InverseDiffeo inv = invert_diffeo(b);
  S.le("straightening", "inverse diffeomorphism composition", sup_norm(compose_diffeo(inv.beta_tilde, b, 1.0) + b),
       1e-9);
}

struct Instance {
  Regularized reg;
  KamResult kam;
  FrequencyConfig f;
};

Instance small_instance(Rng& rng) {
  Instance in;
  in.f = freq1();
  const Lattice lat(1, 6, 16);
  TorusFunction a = from_modes(lat, {{{1}, 1, 1e-3, 0.0}, {{0}, 2, 5e-4, 2.0 * M_PI * std::uniform_real_distribution<>()(rng)}});
  in.reg = regularize(a, ToeplitzOperator(), in.f, lat);
  in.kam = kam_iterate(in.reg.R, in.reg.m, in.f.omega, KamParams::standard(1, in.f.gamma, 4, 6));
  return in;
}

void egorov_flow(Suite& S, Rng& rng, const Instance& in) {
  const Regularized& reg = in.reg;
  const Lattice& lat = reg.R.lat;
  TorusFunction u = random_real(lat, rng, 1.0, 1.0, 1, 3);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) u.at(li, 0) = 0.0;
  ToeplitzOperator Jm = ToeplitzOperator::diagonal(lat, [&](int j) { return cd(0.0, reg.m * omega_dp(j)); });
  TorusFunction lhs = omega_dphi(u, in.f.omega) - apply(Jm, u) + apply(reg.R, u);
  TorusFunction w = apply(reg.Phi1_inv, u);
  TorusFunction rhs = apply(reg.Phi1, omega_dphi(w, in.f.omega) - apply(reg.X, w));
  double err = 0.0, scale = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    if (lat.ell_linf(li) > lat.l_max / 2) continue;
    for (int j = -lat.j_max / 2; j <= lat.j_max / 2; ++j) {
      err = std::max(err, std::abs(lhs.at(li, j) - rhs.at(li, j)));
      scale = std::max(scale, std::abs(lhs.at(li, j)));
    }
  }
  S.le("straightening", "conjugation identity on interior modes", err / scale, 1e-10);

  double omega_defect = reg.symplectic_defect;
  const int n = lat.n_j();
  for (int t = 0; t < 8; ++t) {
    std::vector<double> phi{2.0 * M_PI * std::uniform_real_distribution<>()(rng)};
    auto [P, Pi] = flow_at(reg.straight.beta, lat, phi, reg.flow_options);
    Eigen::VectorXcd x(n), y(n);
    for (int k = 0; k < n; ++k) x[k] = cd(normal(rng), normal(rng)), y[k] = cd(normal(rng), normal(rng));
    x[lat.jj(0)] = y[lat.jj(0)] = 0.0;
    omega_defect = std::max(omega_defect, std::abs(omega_form(P * x, P * y) - omega_form(x, y)) /
                                              (x.norm() * y.norm()));
  }
  S.le("egorov-flow", "symplectic form preserved by the flow", omega_defect, 1e-9);
  S.le("egorov-flow", "conjugated operator Hamiltonian and real",
       std::max(reg.structure.hamiltonian_defect, reg.structure.reality_defect), 1e-9);

  // principal symbol of A^1 Op(c (i xi)) (A^1)^{-1} is c(x + beta) / (1 + beta_x)
  const Lattice xl(1, 0, 16);
  TorusFunction beta = random_real(xl, rng, 0.005, 2.0, 0, 2);
  TorusFunction c = random_real(xl, rng, 0.1, 2.0, 0, 3);
  c.at(xl.zero(), 0) = 1.0;
  PolySymbol ws;
  ws.terms[1] = c;
  auto q = egorov_transport(ws, beta, 3);
  const int Nx = 64;
  auto qg = to_grid(q.q.terms.at(1), 1, Nx);
  auto bg = to_grid(beta, 1, Nx);
  auto bxg = to_grid(dx(beta), 1, Nx);
  std::vector<cd> cc(xl.n_j());
  for (int j = -16; j <= 16; ++j) cc[xl.jj(j)] = c.at(xl.zero(), j);
  double perr = 0.0;
  for (int k = 0; k < Nx; ++k) {
    double x = 2.0 * M_PI * k / Nx;
    cd expect = eval_series(cc.data(), 16, x + bg[k].real()) / (1.0 + bxg[k].real());
    perr = std::max(perr, std::abs(qg[k] - expect));
  }
  S.le("egorov-flow", "principal symbol transported along characteristics", perr, 1e-12);
}

void kam(Suite& S, Rng& /*rng*/, const Instance& in) {
  const KamResult& k = in.kam;
  double id = 0.0, st = 0.0, mono = 0.0;
  for (std::size_t i = 0; i < k.trace.size(); ++i) {
    id = std::max(id, k.trace[i].identity_residual);
    st = std::max(st, k.trace[i].structure_defect);
    if (i + 1 < k.trace.size()) mono = std::max(mono, k.trace[i + 1].offdiag_norm / k.trace[i].offdiag_norm);
  }
  S.le("kam", "homological identity at every step", id, 1e-12);
  S.le("kam", "Hamiltonian structure at every step", st, 1e-9);
  S.le("kam", "r_j odd in j", k.spectral.oddness_defect(), 1e-10);
  S.le("kam", "off-diagonal norm strictly decreasing (max ratio)", mono, 1.0 - 1e-12);
  S.le("kam", "excluded flag clear on a Melnikov-admissible omega", k.excluded ? 1.0 : 0.0, 0.0);

  // first-order scaling of the generator
  const ToeplitzOperator& R = in.reg.R;
  const int J = R.lat.j_max;
  std::vector<double> e(2 * J + 1, 0.0);
  for (int j = -J; j <= J; ++j) e[j + J] = -in.reg.m * omega_dp(j);
  KamParams p = KamParams::standard(1, in.f.gamma, 4, 6);
  std::vector<double> X, Y;
  for (double c : {1.0, 0.5, 0.25}) {
    KamStep ks = kam_step(e, cd(c) * R, in.f.omega, p, p.N(0));
    X.push_back(std::log(c));
    Y.push_back(std::log(ks.A.max_abs()));
  }
  double slope = (Y[0] - Y[2]) / (X[0] - X[2]);
  S.in("kam", "generator scales linearly with the perturbation", slope, 1.0 - 1e-3, 1.0 + 1e-3);
}

void measure(Suite& S) {
  DModel d;
  Box box{2, 1.0};
  MeasureOptions o;
  o.cutoff_R = 3;
  o.cutoff_Q = 20;
  o.lines = 200;
  std::vector<double> gs{0.001, 0.00316227766, 0.01};
  MeasureTable t = excluded_measure(gs, d, box, o);
  double mono = 0.0, slice = 0.0;
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) mono = std::max(mono, t.rows[i].measure - t.rows[i + 1].measure);
  for (const auto& r : t.rows) slice = std::max(slice, r.max_slice_ratio);
  MeasureOptions lo = o;
  lo.cutoff_R = 2;
  lo.cutoff_Q = 10;
  mono = std::max(mono, union_measure(gs[1], d, box, lo).measure - t.rows[1].measure);
  S.le("resonance-measure", "measure nondecreasing in gamma and cutoffs", mono, 0.0);
  S.le("resonance-measure", "slice measures within 8 eta <l>^{-sigma-1}", slice, 1.0);
  MeasureOptions np = o;
  np.prune = false;
  S.le("resonance-measure", "pruning changes the union by less than the tail bound",
       std::abs(union_measure(gs[1], d, box, np).measure - t.rows[1].measure) / t.rows[1].tail_bound, 1.0);
  S.in("resonance-measure", "log-log slope over one decade of gamma", t.slope, 0.9, 1.2);
}

void evolution(Suite& S, Rng& rng, const Instance& in) {
  {
    const Lattice op(1, 0, 8);
    ToeplitzOperator X = dp_operator(TorusFunction(op), ToeplitzOperator(), op);
    Eigen::VectorXcd u0(op.n_j());
    for (int k = 0; k < u0.size(); ++k) u0[k] = cd(normal(rng), normal(rng));
    EvolveOptions o;
    o.T = 100.0;
    o.dt = 0.01;
    o.record_every = 1000;
    o.s_list = {0.0, 3.0, 5.0};
    auto tr = evolve_full(u0, X, {1.0}, o);
    double drift = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      for (std::size_t k = 0; k < o.s_list.size(); ++k)
        drift = std::max(drift, std::abs(tr.norms[i][k] / tr.norms[0][k] - 1.0));
    S.le("evolution", "norm drift for a = 0 over 1e4 steps", drift, 1e-12);
  }
  const int J = in.reg.X.lat.j_max;
  Eigen::VectorXcd u0 = Eigen::VectorXcd::Zero(2 * J + 1);
  for (int j = 1; j <= 3; ++j) {
    cd c(normal(rng), normal(rng));
    u0[J + j] = c / double(j * j);
    u0[J - j] = std::conj(c) / double(j * j);
  }
  std::vector<double> disc;
  for (double dt : {0.02, 0.01}) {
    EvolveOptions o;
    o.T = 20.0;
    o.dt = dt;
    o.record_every = static_cast<int>(std::lround(1.0 / dt));
    o.s_list = {SobolevIndex::s0(1) + 0.0};
    o.m = in.reg.m;
    auto full = evolve_full(u0, in.reg.X, in.f.omega, o);
    auto red = evolve_reduced(u0, in.reg, in.kam, in.f.omega, full.times, o.s_list);
    disc.push_back(trajectory_discrepancy(red, full, o.s_list[0]));
  }
  S.in("evolution", "reduced/full discrepancy ratio under dt halving", disc[0] / disc[1], 3.0, 5.0);

  const Lattice lat(1, 4, 16);
  std::vector<double> cs;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    TorusFunction a = from_modes(lat, {{{1}, 1, eps, 0.0}});
    ToeplitzOperator X = dp_operator(a, ToeplitzOperator(), lat);
    X.drop_zero_mode();
    EvolveOptions o;
    o.T = 50.0;
    o.dt = 0.02;
    o.record_every = 10;
    o.s_list = {SobolevIndex::s0(1) + 2.0};
    auto tr = evolve_full(u0, X, in.f.omega, o);
    cs.push_back(norm_stability_report(tr, o.s_list[0]).c());
  }
  S.le("evolution", "stability constant decreasing in epsilon (max ratio)", std::max(cs[1] / cs[0], cs[2] / cs[1]),
       1.0 - 1e-12);
}

void harness(Suite& S) {
  RunConfig c = parse_config(
      "schema_version: 1\n"
      "frequency: {nu: 1}\n"
      "problem: {epsilon: 1.0e-3, a_modes: [{ell: [1], j: 1, amplitude: 1.0, phase: 0.0}]}\n"
      "truncation: {j_max: 8, l_max: 3}\n");
  RunReport r1 = cmd_reduce(c, ""), r2 = cmd_reduce(c, "");
  S.le("harness", "identical reports for identical config", r1.doc.dump() == r2.doc.dump() ? 0.0 : 1.0, 0.0);
  S.le("harness", "reduce succeeds on the small instance", r1.exit_code, 0.0);

  int misnamed = 0;
  RunConfig z = parse_config(
      "schema_version: 1\n"
      "frequency: {nu: 2, omega: [2.0, 1.0]}\n"
      "problem: {epsilon: 1.0e-3, a_modes: [{ell: [1, 0], j: 1, amplitude: 1.0, phase: 0.0}]}\n"
      "truncation: {j_max: 8, l_max: 3}\n");
  RunReport rz = cmd_reduce(z, "");
  if (rz.exit_code != kExitExcluded || rz.doc["failure"]["object"].get<std::string>().find("O_0") == std::string::npos)
    ++misnamed;
  RunConfig f = parse_config(
      "schema_version: 1\n"
      "frequency: {nu: 1, omega: [1.0]}\n"
      "problem: {epsilon: 1.0e-3, a_modes: [{ell: [1], j: 1, amplitude: 1.0, phase: 0.0}]}\n"
      "truncation: {j_max: 8, l_max: 3}\n");
  RunReport rf = cmd_reduce(f, "");
  if (rf.exit_code != kExitExcluded ||
      rf.doc["failure"]["object"].get<std::string>().find("Melnikov") == std::string::npos)
    ++misnamed;
  S.le("harness", "resonant omega reported with the violated set", misnamed, 0.0);
}

}  // namespace

SelfCheckReport run_selfcheck(std::uint64_t seed) {
  Suite S;
  Rng rng(seed);
  core_fourier(S, rng);
  symbol_calculus(S, rng);
  toeplitz(S, rng);
  straightening(S, rng);
  Instance in = small_instance(rng);
  egorov_flow(S, rng, in);
  kam(S, rng, in);
  measure(S);
  evolution(S, rng, in);
  harness(S);
  return S.report;
}

}  // namespace qpr
