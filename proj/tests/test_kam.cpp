#include <doctest.h>

#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpr/egorov.hpp"
#include "qpr/errors.hpp"
#include "qpr/kam.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

const std::vector<double> kPhi{1.618033988749895};

// Hamiltonian order -1 perturbation with l in {-1, 0, 1}
ToeplitzOperator perturbation(const Lattice& lat, double eps, unsigned seed) {
  std::mt19937_64 rng(seed);
  TorusFunction c = random_real(lat, rng, eps, 2.0, 1, 3);
  ToeplitzOperator R = order_minus_one_perturbation(c, lat);
  R.drop_zero_mode();
  return R;
}

std::vector<double> unperturbed(int J, double m) {
  std::vector<double> e(2 * J + 1);
  for (int j = -J; j <= J; ++j) e[j + J] = -m * omega_dp(j);
  return e;
}

}  // namespace

TEST_CASE("parameter relations") {
  KamParams p = KamParams::standard(2, 0.1);
  CHECK(p.tau == 10.0);
  CHECK(p.b0 == 66.0);
  CHECK(p.a_exp == 64.0);
  CHECK(p.tau1 == 22.0);
  CHECK(p.N(-1) == 1);
  CHECK(p.N(0) == 4);
  CHECK(p.N(1) == 8);
  CHECK(p.N(2) == 23);
  CHECK_NOTHROW(p.validate());
  p.tau = 9.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.overridden = true;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("second Melnikov scan against brute force") {
  SpectralData d;
  d.m = 1.0;
  d.j_max = 12;
  d.r.assign(25, 0.0);
  const double g = std::pow(0.1, 1.5);
  double worst = std::numeric_limits<double>::infinity();
  for (int l = -4; l <= 4; ++l)
    for (int j = -12; j <= 12; ++j)
      for (int jp = -12; jp <= 12; ++jp) {
        if (j == 0 || jp == 0 || (l == 0 && j == jp)) continue;
        double div = kPhi[0] * l + omega_dp(j) - omega_dp(jp);
        worst = std::min(worst, std::abs(div) / (g * std::pow(std::max(1, std::abs(l)), -8.0)));
      }
  ResonanceScan s = melnikov_second(kPhi, d, 0.1, 8.0, 4, false);
  CHECK(s.margin == doctest::Approx(worst));
  ResonanceScan sp = melnikov_second(kPhi, d, 0.1, 8.0, 4, true);
  CHECK(sp.margin == doctest::Approx(worst));
  // omega = omega(3) - omega(1) is resonant at l = 1, (j, j') = (1, 3)
  ResonanceScan bad = melnikov_second({omega_dp(3) - omega_dp(1)}, d, 0.1, 8.0, 2);
  CHECK_FALSE(bad.ok);
  CHECK(std::abs(bad.divisor) < 1e-14);
}

TEST_CASE("homological solve entry by entry") {
  Lattice lat(1, 3, 8);
  ToeplitzOperator P = perturbation(lat, 1e-3, 1);
  auto e = unperturbed(8, 1.0);
  double res = 1.0;
  ToeplitzOperator A = homological_solve(P, kPhi, e, std::pow(0.1, 1.5), 8.0, 2, &res);
  CHECK(res < 1e-15);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -8; j <= 8; ++j)
      for (int jp = -8; jp <= 8; ++jp) {
        if (lat.ell_l1(li) > 2 || (li == lat.zero() && j == jp) || j == 0 || jp == 0) {
          CHECK(A.at(li, j, jp) == cd(0.0));
          continue;
        }
        double div = kPhi[0] * lat.ell(li)[0] - omega_dp(j) + omega_dp(jp);
        CHECK(std::abs(A.at(li, j, jp) * I * div - P.at(li, j, jp)) < 1e-17);
      }
  CHECK(structure_check(A).is_hamiltonian);
}

TEST_CASE("one KAM step conjugates as claimed") {
  Lattice lat(1, 6, 8);
  ToeplitzOperator P = perturbation(lat, 1e-3, 2);
  auto e = unperturbed(8, 1.0);
  KamParams p = KamParams::standard(1, 0.1);
  KamStep st = kam_step(e, P, kPhi, p, p.N(0));
  CHECK(st.identity_residual < 1e-15);
  CHECK(st.structure_defect < 1e-12);
  // exp(A) (omega.d + D + P) exp(-A) at a fixed angle, the omega-derivative by 4th-order differences
  const double phi0 = 0.7, h = 1e-3;
  auto Emin = [&](double t) {
    Eigen::MatrixXcd a = evaluate_at(st.A, {phi0 + kPhi[0] * t});
    return Eigen::MatrixXcd((-a).exp());
  };
  Eigen::MatrixXcd Ep = evaluate_at(st.A, {phi0}).exp();
  Eigen::MatrixXcd dE = (-Emin(2 * h) + 8.0 * Emin(h) - 8.0 * Emin(-h) + Emin(-2 * h)) / (12.0 * h);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(17, 17);
  Eigen::MatrixXcd Dp = D;
  for (int j = -8; j <= 8; ++j) {
    D(j + 8, j + 8) = I * e[j + 8];
    Dp(j + 8, j + 8) = I * st.e_plus[j + 8];
  }
  Eigen::MatrixXcd lhs = Ep * (D + evaluate_at(P, {phi0})) * Emin(0.0) + Ep * dE;
  Eigen::MatrixXcd rhs = Dp + evaluate_at(st.P_plus, {phi0});
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  // quadratic: the new perturbation is much smaller than the old
  CHECK(majorant_norm(st.P_plus, 0.0) < 0.05 * majorant_norm(P, 0.0));
  // linear in P to first order
  KamStep half = kam_step(e, cd(0.5) * P, kPhi, p, p.N(0));
  CHECK((half.A - cd(0.5) * st.A).max_abs() < 1e-15);
}

TEST_CASE("iteration on a Melnikov-admissible frequency") {
  Lattice lat(1, 6, 12);
  ToeplitzOperator R = perturbation(lat, 2e-3, 3);
  KamResult k = kam_iterate(R, 1.0, kPhi, KamParams::standard(1, 0.1));
  CHECK_FALSE(k.excluded);
  REQUIRE(k.trace.size() >= 2);
  for (std::size_t i = 0; i + 1 < k.trace.size(); ++i) CHECK(k.trace[i + 1].offdiag_norm < k.trace[i].offdiag_norm);
  CHECK(k.final_norm < 1e-10);
  CHECK(k.spectral.oddness_defect() < 1e-12);
  for (const auto& t : k.trace) {
    CHECK(t.identity_residual < 1e-12);
    CHECK(t.structure_defect < 1e-9);
  }
  // Phi2 (omega.d - m J + R) Phi2^{-1} is diagonal at a sample angle
  const double phi0 = 1.1, h = 1e-3;
  auto Pinv = [&](double t) { return evaluate_at(k.Phi2_inv, {phi0 + kPhi[0] * t}); };
  Eigen::MatrixXcd P = evaluate_at(k.Phi2, {phi0});
  Eigen::MatrixXcd dP = (-Pinv(2 * h) + 8.0 * Pinv(h) - 8.0 * Pinv(-h) + Pinv(-2 * h)) / (12.0 * h);
  Eigen::MatrixXcd L = evaluate_at(R, {phi0});
  for (int j = -12; j <= 12; ++j) L(j + 12, j + 12) -= I * omega_dp(j);
  Eigen::MatrixXcd M = P * L * Pinv(0.0) + P * dP;
  Eigen::MatrixXcd off = M;
  off.diagonal().setZero();
  off.row(12).setZero();
  off.col(12).setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 1e-9);
  for (int j = 1; j <= 12; ++j) CHECK(std::abs(M(j + 12, j + 12) - I * k.spectral.d(j) * -1.0) < 1e-9);
}

TEST_CASE("resonant frequency is excluded with the violated index") {
  Lattice lat(1, 4, 8);
  ToeplitzOperator R = perturbation(lat, 1e-3, 4);
  KamResult k = kam_iterate(R, 1.0, {omega_dp(3) - omega_dp(1)}, KamParams::standard(1, 0.1));
  CHECK(k.excluded);
  CHECK(k.stop_reason == "melnikov");
  CHECK(std::abs(k.violation.ell[0]) == 1);
}

TEST_CASE("smallness proxy") {
  Lattice lat(1, 4, 8);
  ToeplitzOperator R = perturbation(lat, 5.0, 5);
  CHECK_THROWS_AS(kam_iterate(R, 1.0, kPhi, KamParams::standard(1, 0.1)), SmallnessError);
}
