#include <doctest.h>

#include <algorithm>

#include "qpr/errors.hpp"
#include "qpr/measure.hpp"

using namespace qpr;

namespace {

// length of the union of open intervals clipped to [lo, hi]
double union_length(std::vector<std::pair<double, double>> v, double lo, double hi) {
  for (auto& p : v) p = {std::max(p.first, lo), std::min(p.second, hi)};
  v.erase(std::remove_if(v.begin(), v.end(), [](auto& p) { return p.second <= p.first; }), v.end());
  std::sort(v.begin(), v.end());
  double total = 0.0, a = -1e300, b = -1e300;
  for (auto [x, y] : v) {
    if (x > b) {
      total += std::max(0.0, b - a);
      a = x;
      b = y;
    } else {
      b = std::max(b, y);
    }
  }
  return total + std::max(0.0, b - a);
}

MeasureOptions first_order_only(int cutoff_Q, double tau) {
  MeasureOptions o;
  o.cutoff_R = 0;
  o.cutoff_zero = 0;
  o.cutoff_Q = cutoff_Q;
  o.tau = tau;
  return o;
}

}  // namespace

TEST_CASE("single first-order set in closed form") {
  DModel d;
  Box box{2, 1.0};
  // |omega_1 - 1| < 2 gamma on [1, 2]^2 has area 2 gamma
  for (double g : {0.1, 0.03}) {
    BadSetSpec q{BadSetSpec::Kind::Q, {1, 0}, -1, 0, g, 4.0};
    SetMeasure m = bad_set_measure_1d(q, d, box, 50);
    CHECK(m.measure == doctest::Approx(2.0 * g).epsilon(1e-12));
    CHECK(m.max_slice <= m.cap);
  }
  BadSetSpec zero{BadSetSpec::Kind::Q, {1, 0}, -1, 0, 0.0, 4.0};
  CHECK(bad_set_measure_1d(zero, d, box).measure == 0.0);
}

TEST_CASE("oblique set against the strip area") {
  DModel d;
  Box box{2, 1.0};
  // |omega_1 - omega_2 + d_1 - d_2| < w: a diagonal strip of the unit square at offset c
  BadSetSpec r{BadSetSpec::Kind::R, {1, -1}, 1, 2, 0.01, 2.0};
  const double c = omega_dp(1) - omega_dp(2), w = bad_set_halfwidth(r);
  CHECK(w == doctest::Approx(2.0 * 0.01 / 4.0));
  // area of {|x - y + c| < w} in [0, 1]^2, |c| + w < 1: integral of the triangle profile
  auto F = [](double t) { return t <= 0.0 ? 0.0 : (t >= 1.0 ? 1.0 : 1.0 - 0.5 * (1.0 - t) * (1.0 - t) - 0.5); };
  // P(x - y < t) for independent uniforms
  auto cdf = [&](double t) { return t >= 0.0 ? 0.5 + F(t) : 0.5 - F(-t); };
  double area = cdf(-c + w) - cdf(-c - w);
  SetMeasure m = bad_set_measure_1d(r, d, box, 2000);
  CHECK(m.measure == doctest::Approx(area).epsilon(1e-4));
  CHECK(m.max_slice <= m.cap * (1 + 1e-12));
  // cap from the proof: 8 eta <l>^{-sigma-1}
  CHECK(m.cap == doctest::Approx(8.0 * 0.01 / 8.0));
}

TEST_CASE("union in one dimension matches interval arithmetic") {
  DModel d;
  Box box{1, 1.0};
  for (double g : {0.01, 0.05}) {
    MeasureOptions o = first_order_only(2, 3.0);
    std::vector<std::pair<double, double>> iv;
    for (int l : {-2, -1, 1, 2})
      for (int h = -6; h <= 6; ++h) {
        if (h == 0) continue;
        double w = 2.0 * g * std::pow(std::abs(l), -3.0);
        // |omega l + h| < w
        double a = (-h - w) / l, b = (-h + w) / l;
        iv.push_back({std::min(a, b), std::max(a, b)});
      }
    double ref = union_length(iv, 1.0, 2.0);
    MeasureRow row = union_measure(g, d, box, o);
    CHECK(row.measure == doctest::Approx(ref).epsilon(1e-9));
    CHECK(std::abs(row.measure - ref) < 1e-6);
  }
}

TEST_CASE("large gamma saturates at the full box") {
  DModel d;
  Box box{1, 1.0};
  MeasureRow row = union_measure(2.0, d, box, first_order_only(2, 3.0));
  CHECK(row.measure == doctest::Approx(1.0));
}

TEST_CASE("monotone in gamma and in the cutoffs") {
  DModel d;
  Box box{2, 1.0};
  MeasureOptions o;
  o.cutoff_R = 2;
  o.cutoff_Q = 8;
  o.cutoff_zero = 8;
  o.lines = 100;
  double prev = 0.0;
  for (double g : {0.001, 0.003, 0.01}) {
    double m = union_measure(g, d, box, o).measure;
    CHECK(m >= prev);
    prev = m;
  }
  MeasureOptions more = o;
  more.cutoff_Q = 12;
  more.cutoff_R = 3;
  CHECK(union_measure(0.003, d, box, more).measure >= union_measure(0.003, d, box, o).measure);
}

TEST_CASE("pruning is sound") {
  // every pair dropped by the necessary condition has an empty set in the box
  for (auto ell : {std::vector<int>{1, 0}, std::vector<int>{2, -1}}) {
    auto kept = prune_indices(ell, 30, 1.0);
    DModel d;
    Box box{2, 1.0};
    for (int j = -30; j <= 30; ++j)
      for (int k = -30; k <= 30; ++k) {
        if (j == 0 || k == 0 || j == k) continue;
        if (std::find(kept.begin(), kept.end(), std::make_pair(j, k)) != kept.end()) continue;
        BadSetSpec r{BadSetSpec::Kind::R, ell, j, k, 0.01, 4.0};
        CHECK(bad_set_measure_1d(r, d, box, 20).measure == 0.0);
      }
  }
  CHECK(prune_indices({0, 0}, 10, 1.0).empty());
  // survivors grow with |l|
  CHECK(prune_indices({2, 0}, 40, 1.0).size() > prune_indices({1, 0}, 40, 1.0).size());

  DModel d;
  Box box{2, 1.0};
  MeasureOptions o;
  o.cutoff_R = 2;
  o.cutoff_Q = 8;
  o.lines = 100;
  MeasureRow a = union_measure(0.003, d, box, o);
  o.prune = false;
  MeasureRow b = union_measure(0.003, d, box, o);
  CHECK(std::abs(a.measure - b.measure) <= a.tail_bound);
}

TEST_CASE("tail bound shrinks with the cutoffs") {
  DModel d;
  Box box{2, 1.0};
  MeasureOptions o;
  o.cutoff_R = 2;
  o.cutoff_Q = 8;
  double t0 = tail_bound(0.01, d, box, o);
  o.cutoff_Q = 16;
  o.cutoff_R = 4;
  double t1 = tail_bound(0.01, d, box, o);
  CHECK(t0 > 0.0);
  CHECK(t1 < t0);
  CHECK(tail_bound(0.001, d, box, o) < t1);
  // a tolerance below the bound is a configuration error naming the cutoffs
  o.tail_tol = 1e-3 * t1;
  o.lines = 20;
  try {
    excluded_measure({0.01}, d, box, o);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cutoff_Q") != std::string::npos);
  }
}

TEST_CASE("inclusion of second-order sets in first-order sets") {
  DModel d;
  d.j_max = 40;
  d.r.assign(81, 0.0);
  for (int j = -40; j <= 40; ++j)
    if (j != 0) d.r[j + 40] = 0.05 / j;
  Box box{2, 1.0};
  std::mt19937_64 rng(1);
  const double g = 0.01;
  // below the threshold
  auto na = inclusion_check({1, 0}, 2, 3, g, 10.0, 4.0, d, box, 1.0, 100, rng);
  CHECK(na.verdict == InclusionResult::Verdict::NotApplicable);
  CHECK(na.threshold == doctest::Approx(10.0));
  // far above it the sampled inclusion holds; (j, k) and (-k, -j) agree
  for (auto [j, k] : {std::pair{30, 29}, std::pair{-29, -30}}) {
    auto r = inclusion_check({1, 0}, j, k, g, 10.0, 4.0, d, box, 1.0, 1000, rng);
    CHECK(r.verdict != InclusionResult::Verdict::Violated);
  }
  double C = smallest_inclusion_constant({1, 0}, g, 10.0, 4.0, d, box, 40, 200, rng);
  CHECK(C > 0.0);
  CHECK(C < 10.0);
}

TEST_CASE("listing cutoff") {
  MeasureOptions o;
  CHECK(listing_cutoff(1.0, o) == 16);
  CHECK(listing_cutoff(0.01, o) == 100);
  CHECK(listing_cutoff(0.0001, o) == 1000);
}

TEST_CASE("fitted slope in the linear regime") {
  DModel d;
  Box box{2, 1.0};
  MeasureOptions o;
  o.cutoff_R = 3;
  o.cutoff_Q = 20;
  o.lines = 200;
  MeasureTable t = excluded_measure({0.001, 0.00316227766, 0.01}, d, box, o);
  CHECK(t.slope >= 0.9);
  CHECK(t.slope <= 1.2);
  for (const auto& r : t.rows) CHECK(r.max_slice_ratio <= 1.0);
}
