#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "qpr/egorov.hpp"
#include "qpr/errors.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

// Fourier coefficients f_k, |k| <= K, of a real 2pi-periodic function by the trapezoid rule
std::vector<cd> coefficients(const std::function<double(double)>& f, int K, int n = 1024) {
  std::vector<cd> c(2 * K + 1, 0.0);
  for (int s = 0; s < n; ++s) {
    double x = 2.0 * M_PI * s / n, v = f(x);
    for (int k = -K; k <= K; ++k) c[k + K] += v * std::exp(cd(0.0, -k * x)) / double(n);
  }
  return c;
}

// x-only real beta on |j| <= 2
TorusFunction small_beta(double amp) {
  Lattice bl(1, 0, 2);
  return from_modes(bl, {{{0}, 1, amp, 0.4}, {{0}, 2, 0.5 * amp, -1.0}});
}

// classical RK4 for d_tau P = G(tau) P, G_{j j'} = i omega(j) b_tau(j - j'), b_tau = beta / (1 + tau beta_x)
Eigen::MatrixXcd flow_oracle(const TorusFunction& beta, int J, int steps) {
  const int n = 2 * J + 1;
  auto b = [&](double x) { return evaluate(beta, {0.0}, x).real(); };
  auto bx = [&](double x) { return evaluate(dx(beta), {0.0}, x).real(); };
  auto G = [&](double tau) {
    auto c = coefficients([&](double x) { return b(x) / (1.0 + tau * bx(x)); }, 2 * J, 256);
    Eigen::MatrixXcd g(n, n);
    for (int j = -J; j <= J; ++j)
      for (int jp = -J; jp <= J; ++jp) g(j + J, jp + J) = I * omega_dp(j) * c[j - jp + 2 * J];
    return g;
  };
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(n, n);
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    double t = s * h;
    Eigen::MatrixXcd g0 = G(t), g1 = G(t + h / 2), g2 = G(t + h);
    Eigen::MatrixXcd k1 = g0 * P, k2 = g1 * (P + h / 2 * k1), k3 = g1 * (P + h / 2 * k2), k4 = g2 * (P + h * k3);
    P += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return P;
}

}  // namespace

TEST_CASE("J o (1 + a) entries") {
  std::mt19937_64 rng(1);
  Lattice lat(1, 2, 5);
  TorusFunction a = random_real(lat, rng, 0.1, 1.0);
  ToeplitzOperator X = dp_operator(a, ToeplitzOperator(), lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -5; j <= 5; ++j)
      for (int jp = -5; jp <= 5; ++jp) {
        cd mult = std::abs(j - jp) <= 5 ? a.at(li, j - jp) : cd(0.0);
        if (li == lat.zero() && j == jp) mult += 1.0;
        CHECK(std::abs(X.at(li, j, jp) - I * omega_dp(j) * mult) < 1e-15);
      }
  TorusFunction c = random_real(lat, rng, 0.1, 1.0);
  ToeplitzOperator Q = order_minus_one_perturbation(c, lat);
  std::size_t li = lat.index(std::vector<int>{1});
  CHECK(std::abs(Q.at(li, 3, 1) - I * omega_dp(3) * c.at(li, 2) / 3.0) < 1e-15);
  CHECK(structure_check(Q).is_hamiltonian);
  ToeplitzOperator XQ = dp_operator(a, Q, lat);
  CHECK((XQ - (X - Q)).max_abs() < 1e-15);
}

TEST_CASE("change of variables A^tau") {
  TorusFunction beta = small_beta(0.05);
  Lattice op(1, 0, 12);
  Lattice ul(1, 0, 3);
  TorusFunction u = from_modes(ul, {{{0}, 1, 1.0, 0.0}, {{0}, 3, 0.5, 0.2}});
  for (double tau : {0.5, 1.0}) {
    ToeplitzOperator A = build_A_tau(beta, tau, op);
    TorusFunction r = apply(A, u.resized(op));
    auto ref = coefficients(
        [&](double x) {
          double y = x + tau * evaluate(beta, {0.0}, x).real();
          return (1.0 + tau * evaluate(dx(beta), {0.0}, x).real()) * evaluate(u, {0.0}, y).real();
        },
        12);
    for (int j = -8; j <= 8; ++j) CHECK(std::abs(r.at(0, j) - ref[j + 12]) < 1e-13);
  }
  // A^1 (A^1)^{-1} = I on interior modes
  Lattice wide(1, 0, 32);
  ToeplitzOperator A = build_A_tau(beta, 1.0, wide), Ai = build_A_tau_inverse(beta, 1.0, wide);
  Eigen::MatrixXcd P = Eigen::MatrixXcd(A.slab(0)) * Eigen::MatrixXcd(Ai.slab(0));
  CHECK((P - Eigen::MatrixXcd::Identity(65, 65)).block(26, 26, 13, 13).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(build_A_tau(30.0 * beta, 1.0, op), DiffeoError);
}

TEST_CASE("flow against an RK4 oracle") {
  TorusFunction beta = small_beta(0.01);
  Lattice op(1, 0, 8);
  Eigen::MatrixXcd ref = flow_oracle(beta, 8, 200);
  FlowOptions fine;
  fine.n_steps = 256;
  auto [P, Pi] = flow_at(beta, op, {0.0}, fine);
  CHECK((P - ref).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((P * Pi - Eigen::MatrixXcd::Identity(17, 17)).cwiseAbs().maxCoeff() < 1e-13);
  // the midpoint-exponential substeps converge at second order
  FlowOptions c8, c16;
  c8.n_steps = 8;
  c16.n_steps = 16;
  double e8 = (flow_at(beta, op, {0.0}, c8).first - ref).cwiseAbs().maxCoeff();
  double e16 = (flow_at(beta, op, {0.0}, c16).first - ref).cwiseAbs().maxCoeff();
  CHECK(e8 / e16 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("flow is symplectic and close to A^1") {
  TorusFunction beta = small_beta(0.02);
  Lattice op(1, 0, 24);
  FlowResult f = flow_Psi(beta, op);
  CHECK(f.symplectic_defect < 1e-12);
  // Psi = A^1 (I + order -1): the correction decays along the diagonal
  ToeplitzOperator Ai = build_A_tau_inverse(beta, 1.0, op);
  Eigen::MatrixXcd C = Eigen::MatrixXcd(Ai.slab(0)) * Eigen::MatrixXcd(f.Psi.slab(0));
  Eigen::MatrixXcd D = C - Eigen::MatrixXcd::Identity(49, 49);
  Eigen::MatrixXcd E = Eigen::MatrixXcd(f.Psi.slab(0)) - Eigen::MatrixXcd::Identity(49, 49);
  double c4 = std::abs(D(24 + 4, 24 + 3)), c12 = std::abs(D(24 + 12, 24 + 11));
  CHECK(c12 < 0.5 * c4);
  CHECK(std::abs(E(24 + 12, 24 + 11)) > 10.0 * c12);
}

TEST_CASE("principal symbol transport") {
  Lattice xl(1, 0, 16);
  TorusFunction beta = small_beta(0.005).resized(xl);
  TorusFunction c = from_modes(xl, {{{0}, 0, 1.0, 0.0}, {{0}, 1, 0.2, 0.3}, {{0}, 3, 0.1, 0.0}});
  PolySymbol w;
  w.terms[1] = c;
  auto q = egorov_transport(w, beta, 3);
  REQUIRE(q.q.terms.count(1) == 1);
  for (double x : {0.0, 1.0, 2.5, 5.0}) {
    double y = x + evaluate(beta, {0.0}, x).real();
    cd expect = evaluate(c, {0.0}, y) / (1.0 + evaluate(dx(beta), {0.0}, x).real());
    CHECK(std::abs(evaluate(q.q.terms.at(1), {0.0}, x) - expect) < 1e-12);
  }
  // beta = 0 leaves the symbol unchanged
  auto id = egorov_transport(w, TorusFunction(xl), 3);
  CHECK(max_diff(id.q.terms.at(1), c) < 1e-14);
  for (int p = -1; p <= 0; ++p) CHECK(sup_norm(id.q.terms.at(p)) < 1e-14);
  CHECK_THROWS(egorov_transport(w, beta, 2));
}

TEST_CASE("regularization of a small instance") {
  FrequencyConfig f;
  f.nu = 1;
  f.gamma = 0.1;
  f.tau = 8.0;
  f.omega = {1.618033988749895};
  Lattice lat(1, 6, 16);
  TorusFunction a = from_modes(lat, {{{1}, 1, 1e-3, 0.0}, {{0}, 2, 5e-4, 0.7}});
  Regularized r = regularize(a, ToeplitzOperator(), f, lat);
  CHECK(r.m == doctest::Approx(r.straight.m));
  CHECK(r.transport_defect < 1e-10);
  CHECK(r.symplectic_defect < 1e-12);
  CHECK(r.structure.is_hamiltonian);
  CHECK(r.order0_defect < 1e-6);
  // Phi1 L Phi1^{-1} = omega.d_phi - m J + R on interior modes, checked on a random vector
  std::mt19937_64 rng(3);
  TorusFunction u = random_real(Lattice(1, 2, 6), rng, 1.0, 0.0).resized(lat);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) u.at(li, 0) = 0.0;
  ToeplitzOperator Jm = ToeplitzOperator::diagonal(lat, [&](int j) { return cd(0.0, r.m * omega_dp(j)); });
  TorusFunction lhs = omega_dphi(u, f.omega) - apply(Jm, u) + apply(r.R, u);
  TorusFunction w = apply(r.Phi1_inv, u);
  TorusFunction rhs = apply(r.Phi1, omega_dphi(w, f.omega) - apply(r.X, w));
  double err = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    if (lat.ell_linf(li) <= 3)
      for (int j = -8; j <= 8; ++j) err = std::max(err, std::abs(lhs.at(li, j) - rhs.at(li, j)));
  CHECK(err < 1e-10 * sup_norm(lhs));
  // R is of order -1: R_j^j(0) j stays bounded
  double r8 = std::abs(r.R.at(lat.zero(), 8, 8)) * 8, r14 = std::abs(r.R.at(lat.zero(), 14, 14)) * 14;
  CHECK(r14 < 2.0 * r8 + 1e-12);
  CHECK(r.R.max_abs() < 1e-2);
}
