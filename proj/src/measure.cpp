#include "qpr/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpr/errors.hpp"

namespace qpr {

namespace {

int l1_of(const std::vector<int>& l) {
  int s = 0;
  for (int v : l) s += std::abs(v);
  return s;
}

double l2_of(const std::vector<int>& l) {
  double s = 0.0;
  for (int v : l) s += double(v) * v;
  return std::sqrt(s);
}

// orthonormal basis of the complement of u in R^nu
std::vector<std::vector<double>> complement_basis(const std::vector<double>& u) {
  const int nu = static_cast<int>(u.size());
  std::vector<std::vector<double>> basis{u};
  for (int e = 0; e < nu && static_cast<int>(basis.size()) < nu; ++e) {
    std::vector<double> v(nu, 0.0);
    v[e] = 1.0;
    for (const auto& b : basis) {
      double p = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (int i = 0; i < nu; ++i) v[i] -= p * b[i];
    }
    double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (n > 1e-8) {
      for (auto& x : v) x /= n;
      basis.push_back(v);
    }
  }
  basis.erase(basis.begin());
  return basis;
}

// range of (vertex - center).e over the box vertices, per basis vector
std::vector<std::pair<double, double>> transversal_ranges(const std::vector<std::vector<double>>& basis, const Box& box) {
  const int nu = box.nu;
  std::vector<std::pair<double, double>> r(basis.size(), {1e300, -1e300});
  for (int mask = 0; mask < (1 << nu); ++mask)
    for (std::size_t b = 0; b < basis.size(); ++b) {
      double t = 0.0;
      for (int i = 0; i < nu; ++i) t += ((mask >> i) & 1 ? 0.5 : -0.5) * box.L * basis[b][i];
      r[b].first = std::min(r[b].first, t);
      r[b].second = std::max(r[b].second, t);
    }
  return r;
}

// parameter interval {s : p + s u in box}
bool chord(const std::vector<double>& p, const std::vector<double>& u, const Box& box, double& lo, double& hi) {
  lo = -std::numeric_limits<double>::infinity();
  hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    double a = box.L - p[i], b = 2.0 * box.L - p[i];
    if (std::abs(u[i]) < 1e-300) {
      if (a > 0.0 || b < 0.0) return false;
      continue;
    }
    double s1 = a / u[i], s2 = b / u[i];
    lo = std::max(lo, std::min(s1, s2));
    hi = std::min(hi, std::max(s1, s2));
  }
  return hi > lo;
}

struct Interval {
  double a, b;
};

double merged_length(std::vector<Interval>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.a < y.a || (x.a == y.a && x.b < y.b); });
  double total = 0.0, ca = v[0].a, cb = v[0].b;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].a > cb) {
      total += cb - ca;
      ca = v[i].a;
      cb = v[i].b;
    } else {
      cb = std::max(cb, v[i].b);
    }
  }
  return total + (cb - ca);
}

// all l with 0 < |l|_1 <= n
std::vector<std::vector<int>> ells_up_to(int nu, int n) {
  std::vector<std::vector<int>> out;
  Lattice box(nu, n, 0);
  for (std::size_t li = 0; li < box.n_ell(); ++li) {
    int l1 = box.ell_l1(li);
    if (l1 == 0 || l1 > n) continue;
    out.emplace_back(box.ell(li), box.ell(li) + nu);
  }
  return out;
}

// range of omega.l over the box
std::pair<double, double> dot_range(const std::vector<int>& l, const Box& box) {
  double lo = 0.0, hi = 0.0;
  for (int v : l) {
    double a = v * box.L, b = v * 2.0 * box.L;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

// number of l in Z^nu with |l|_1 = n
double shell_count(int nu, int n) {
  if (n == 0) return 1.0;
  // sum_k 2^k C(nu, k) C(n - 1, k - 1)
  double total = 0.0;
  for (int k = 1; k <= std::min(nu, n); ++k) {
    double c1 = 1.0, c2 = 1.0;
    for (int i = 0; i < k; ++i) c1 = c1 * (nu - i) / (i + 1);
    for (int i = 0; i < k - 1; ++i) c2 = c2 * (n - 1 - i) / (i + 1);
    total += std::pow(2.0, k) * c1 * c2;
  }
  return total;
}

}  // namespace

double bad_set_offset(const BadSetSpec& s, const DModel& d) {
  if (s.kind == BadSetSpec::Kind::Q) return d.m * s.j;
  return d.d(s.j) - d.d(s.k);
}

double bad_set_halfwidth(const BadSetSpec& s) { return 2.0 * s.eta * std::pow(bracket_l(l1_of(s.ell)), -s.sigma); }

double slice_cap(const BadSetSpec& s) { return 8.0 * s.eta * std::pow(bracket_l(l1_of(s.ell)), -s.sigma - 1.0); }

SetMeasure bad_set_measure_1d(const BadSetSpec& spec, const DModel& d, const Box& box, int lines) {
  const int nu = box.nu;
  if (static_cast<int>(spec.ell.size()) != nu) throw Error("bad_set_measure_1d: l has the wrong dimension");
  SetMeasure out;
  out.cap = slice_cap(spec);
  const double c = bad_set_offset(spec, d);
  const double delta = bad_set_halfwidth(spec);
  double vol = std::pow(box.L, nu);
  if (l1_of(spec.ell) == 0) {
    // constant in omega: full box or empty
    out.measure = (std::abs(c) < delta && spec.eta > 0.0) ? vol : 0.0;
    return out;
  }
  if (spec.eta <= 0.0) return out;
  const double nl = l2_of(spec.ell);
  std::vector<double> u(nu);
  for (int i = 0; i < nu; ++i) u[i] = spec.ell[i] / nl;
  auto basis = complement_basis(u);
  std::vector<double> center(nu, 1.5 * box.L);
  const int tdim = nu - 1;
  auto ranges = transversal_ranges(basis, box);
  std::vector<double> h(tdim);
  double cell = 1.0;
  for (int b = 0; b < tdim; ++b) cell *= (h[b] = (ranges[b].second - ranges[b].first) / lines);
  std::size_t total = 1;
  for (int i = 0; i < tdim; ++i) total *= static_cast<std::size_t>(lines);
  double acc = 0.0;
  const double wl_center = std::inner_product(center.begin(), center.end(), spec.ell.begin(), 0.0);
  for (std::size_t node = 0; node < total; ++node) {
    std::vector<double> p = center;
    std::size_t rest = node;
    for (int b = 0; b < tdim; ++b) {
      double t = ranges[b].first + (static_cast<double>(rest % lines) + 0.5) * h[b];
      rest /= lines;
      for (int i = 0; i < nu; ++i) p[i] += t * basis[b][i];
    }
    double lo, hi;
    if (!chord(p, u, box, lo, hi)) continue;
    // phi(p + s u) = wl_center + s |l| + c (transversal shift is orthogonal to l)
    double s0 = -(wl_center + c) / nl;
    double a = std::max(lo, s0 - delta / nl), b = std::min(hi, s0 + delta / nl);
    if (b <= a) continue;
    double len = b - a;
    out.max_slice = std::max(out.max_slice, len);
    if (len > out.cap * (1.0 + 1e-12))
      throw Error("bad_set_measure_1d: slice length " + std::to_string(len) + " exceeds the analytic cap " +
                  std::to_string(out.cap));
    acc += len;
  }
  out.measure = acc * cell;
  return out;
}

std::vector<std::pair<int, int>> prune_indices(const std::vector<int>& ell, int j_range, double L) {
  std::vector<std::pair<int, int>> out;
  const double bound = 8.0 * 2.0 * L * l1_of(ell);
  for (int j = -j_range; j <= j_range; ++j) {
    if (j == 0) continue;
    for (int k = -j_range; k <= j_range; ++k) {
      if (k == 0 || k == j) continue;
      if (std::abs(omega_dp(j) - omega_dp(k)) <= bound) out.emplace_back(j, k);
    }
  }
  return out;
}

InclusionResult inclusion_check(const std::vector<int>& ell, int j, int k, double gamma, double tau, double tau1,
                                const DModel& d, const Box& box, double C, int samples, std::mt19937_64& rng) {
  InclusionResult res;
  const int nu = box.nu;
  const double br = bracket_l(l1_of(ell));
  res.threshold = C * std::pow(br, tau1) / std::sqrt(gamma);
  if (std::min(std::abs(j), std::abs(k)) < res.threshold) {
    res.verdict = InclusionResult::Verdict::NotApplicable;
    return res;
  }
  BadSetSpec R{BadSetSpec::Kind::R, ell, j, k, std::pow(gamma, 1.5), tau};
  BadSetSpec Q{BadSetSpec::Kind::Q, ell, j - k, 0, gamma, tau1};
  const double cR = bad_set_offset(R, d), dR = bad_set_halfwidth(R);
  const double cQ = bad_set_offset(Q, d), dQ = bad_set_halfwidth(Q);
  const double nl = l2_of(ell);
  if (nl == 0.0) {
    res.verdict = InclusionResult::Verdict::Empty;
    return res;
  }
  std::vector<double> u(nu);
  for (int i = 0; i < nu; ++i) u[i] = ell[i] / nl;
  auto basis = complement_basis(u);
  std::vector<double> center(nu, 1.5 * box.L);
  const double wl_center = std::inner_product(center.begin(), center.end(), ell.begin(), 0.0);
  const double Rr = 0.5 * box.L * std::sqrt(double(nu));
  std::uniform_real_distribution<double> T(-Rr, Rr), U(0.0, 1.0);
  int tries = 0;
  res.verdict = InclusionResult::Verdict::Empty;
  while (res.samples < samples && tries < 50 * samples) {
    ++tries;
    std::vector<double> p = center;
    for (const auto& b : basis) {
      double t = T(rng);
      for (int i = 0; i < nu; ++i) p[i] += t * b[i];
    }
    double lo, hi;
    if (!chord(p, u, box, lo, hi)) continue;
    double s0 = -(wl_center + cR) / nl;
    double a = std::max(lo, s0 - dR / nl), b = std::min(hi, s0 + dR / nl);
    if (b <= a) continue;
    double s = a + (b - a) * U(rng);
    std::vector<double> w(nu);
    double wl = 0.0;
    for (int i = 0; i < nu; ++i) {
      w[i] = p[i] + s * u[i];
      wl += w[i] * ell[i];
    }
    ++res.samples;
    res.verdict = InclusionResult::Verdict::Holds;
    if (std::abs(wl + cQ) >= dQ) {
      res.verdict = InclusionResult::Verdict::Violated;
      res.witness = w;
      return res;
    }
  }
  return res;
}

double smallest_inclusion_constant(const std::vector<int>& ell, double gamma, double tau, double tau1, const DModel& d,
                                   const Box& box, int j_scan, int samples, std::mt19937_64& rng) {
  // largest min(|j|,|k|) among violating pairs; inclusion holds above it
  int worst = 0;
  for (auto [j, k] : prune_indices(ell, j_scan, box.L)) {
    auto r = inclusion_check(ell, j, k, gamma, tau, tau1, d, box, 0.0, samples, rng);
    if (r.verdict == InclusionResult::Verdict::Violated) worst = std::max(worst, std::min(std::abs(j), std::abs(k)));
  }
  return (worst + 1) * std::sqrt(gamma) / std::pow(bracket_l(l1_of(ell)), tau1);
}

namespace {

double sup_weighted_r(const DModel& d) {
  double rho = 0.0;
  for (int j = -d.j_max; j <= d.j_max; ++j)
    if (j != 0 && !d.r.empty()) rho = std::max(rho, bracket_j(j) * std::abs(d.r[j + d.j_max]));
  return rho;
}

// half width of the slab around omega.l = -m h that holds every R_{l j k} with j - k = h and same-sign |j|, |k| > J
double slab_halfwidth(double eta_R, double tau, int l1, int h, double m, double rho, double J) {
  return 2.0 * eta_R * std::pow(bracket_l(l1), -tau) + 3.0 * m * std::abs(h) / (J * J) + 2.0 * rho / J;
}

// |j - k| above which R_{l j k} misses the box
int pair_width(int l1, const Box& box, double m, double rho, double delta) {
  return static_cast<int>(std::ceil(2.0 * (2.0 * box.L * l1 + delta + 2.0 * rho) / m)) + 1;
}

}  // namespace

int listing_cutoff(double gamma, const MeasureOptions& opt) {
  return std::max(opt.j_cutoff, static_cast<int>(std::ceil(opt.j_scale / std::sqrt(gamma))));
}

MeasureRow union_measure(double gamma, const DModel& d, const Box& box, const MeasureOptions& opt) {
  const int nu = box.nu;
  MeasureRow row;
  row.gamma = gamma;
  row.L = box.L;
  struct Band {
    std::vector<int> ell;
    double c, delta;
  };
  std::vector<Band> bad, zero;
  auto add = [&](std::vector<Band>& to, const std::vector<int>& l, double c, double delta, double cap) {
    auto [lo, hi] = dot_range(l, box);
    if (hi + c <= -delta || lo + c >= delta) return false;
    to.push_back({l, c, delta});
    if (cap > 0.0) row.max_slice_ratio = std::max(row.max_slice_ratio, 2.0 * delta / l2_of(l) / cap);
    return true;
  };
  const double rho = sup_weighted_r(d);
  const double eta_R = std::pow(gamma, 1.5);
  // outside O_0
  for (const auto& l : ells_up_to(nu, opt.cutoff_zero))
    add(zero, l, 0.0, 2.0 * gamma * std::pow(bracket_l(l1_of(l)), -double(nu)), 0.0);
  for (const auto& l : ells_up_to(nu, opt.cutoff_Q)) {
    auto [lo, hi] = dot_range(l, box);
    int hmin = static_cast<int>(std::floor(-hi / d.m)) - 1, hmax = static_cast<int>(std::ceil(-lo / d.m)) + 1;
    for (int h = hmin; h <= hmax; ++h) {
      if (h == 0) continue;
      BadSetSpec q{BadSetSpec::Kind::Q, l, h, 0, gamma, opt.tau};
      add(bad, l, bad_set_offset(q, d), bad_set_halfwidth(q), slice_cap(q));
    }
  }
  const int Jc = listing_cutoff(gamma, opt);
  for (const auto& l : ells_up_to(nu, opt.cutoff_R)) {
    const int l1 = l1_of(l);
    const double delta = 2.0 * eta_R * std::pow(bracket_l(l1), -opt.tau);
    const int w = pair_width(l1, box, d.m, rho, delta);
    // listed sets: min(|j|, |k|) <= Jc
    for (int j = -Jc - w; j <= Jc + w; ++j)
      for (int k = j - w; k <= j + w; ++k) {
        if (j == 0 || k == 0 || j == k) continue;
        if (std::min(std::abs(j), std::abs(k)) > Jc) continue;
        if (opt.prune && std::abs(omega_dp(j) - omega_dp(k)) > 8.0 * 2.0 * box.L * l1) continue;
        BadSetSpec r{BadSetSpec::Kind::R, l, j, k, eta_R, opt.tau};
        add(bad, l, bad_set_offset(r, d), delta, slice_cap(r));
      }
    // slabs for same-sign pairs beyond Jc; opposite signs there have |d_j - d_k| > 2 m Jc - 2 rho
    if (2.0 * d.m * Jc - 2.0 * rho <= 2.0 * box.L * l1 + delta)
      throw ConfigError("union_measure: j_cutoff too small for opposite-sign pairs at |l|_1=" + std::to_string(l1));
    for (int h = -w; h <= w; ++h) {
      if (h == 0) continue;
      if (add(bad, l, d.m * h, slab_halfwidth(eta_R, opt.tau, l1, h, d.m, rho, Jc), 0.0)) ++row.n_slabs;
    }
  }
  row.n_sets = bad.size();
  if (row.max_slice_ratio > 1.0 + 1e-12) throw Error("union_measure: a slice exceeds the analytic cap");

  // lines parallel to the omega_1 axis. For nu = 2 the edges of the sets with l_1 = 0 (bands in omega_2) are
  // breakpoints of the transversal grid, so those sets are measured exactly.
  const int tdim = nu - 1;
  std::vector<std::vector<double>> axis(tdim), weight(tdim);
  {
    std::vector<double> cuts{box.L, 2.0 * box.L};
    if (nu == 2)
      for (const auto* sets : {&bad, &zero})
        for (const auto& s : *sets)
          if (s.ell[0] == 0)
            for (double e : {(-s.delta - s.c) / s.ell[1], (s.delta - s.c) / s.ell[1]})
              if (e > box.L && e < 2.0 * box.L) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());
    for (int b = 0; b < tdim; ++b)
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], w = cuts[i + 1] - cuts[i];
        if (w <= 0.0) continue;
        int n = std::max(1, static_cast<int>(std::lround(opt.lines * w / box.L)));
        for (int k = 0; k < n; ++k) {
          axis[b].push_back(a + (k + 0.5) * w / n);
          weight[b].push_back(w / n);
        }
      }
  }
  std::size_t total = 1;
  for (int i = 0; i < tdim; ++i) total *= axis[i].size();
  auto line_intervals = [&](const std::vector<Band>& sets, const std::vector<double>& v, std::vector<Interval>& iv) {
    bool full = false;
    for (const auto& s : sets) {
      double off = s.c;
      for (int b = 1; b < nu; ++b) off += s.ell[b] * v[b];
      if (s.ell[0] == 0) {
        if (std::abs(off) < s.delta) full = true;
        continue;
      }
      double a = (-s.delta - off) / s.ell[0], b = (s.delta - off) / s.ell[0];
      if (a > b) std::swap(a, b);
      a = std::max(a, box.L);
      b = std::min(b, 2.0 * box.L);
      if (b > a) iv.push_back({a, b});
    }
    return full;
  };
  double acc = 0.0;
  std::vector<Interval> iu, iz;
  std::vector<double> v(nu, 0.0);
  for (std::size_t node = 0; node < total; ++node) {
    std::size_t rest = node;
    double wgt = 1.0;
    for (int b = 1; b < nu; ++b) {
      std::size_t k = rest % axis[b - 1].size();
      rest /= axis[b - 1].size();
      v[b] = axis[b - 1][k];
      wgt *= weight[b - 1][k];
    }
    iu.clear();
    iz.clear();
    if (line_intervals(zero, v, iz)) continue;
    bool ufull = line_intervals(bad, v, iu);
    double z = merged_length(iz);
    if (ufull) {
      acc += wgt * (box.L - z);
      continue;
    }
    // |U \ Z| = |U u Z| - |Z|
    iu.insert(iu.end(), iz.begin(), iz.end());
    acc += wgt * (merged_length(iu) - z);
  }
  row.measure = acc;
  row.measure_over_gamma = row.measure / gamma;
  row.tail_bound = tail_bound(gamma, d, box, opt);
  return row;
}

double tail_bound(double gamma, const DModel& d, const Box& box, const MeasureOptions& opt) {
  const int nu = box.nu;
  // a slab {|omega.l + c| < w} meets the box in measure <= 2w/|l|_2 times the transversal extent
  const double trans = std::pow(std::sqrt(double(nu)) * box.L, nu - 1);
  const double eta_R = std::pow(gamma, 1.5);
  const double rho = sup_weighted_r(d);
  double tq = 0.0, tr = 0.0;
  for (int n = opt.cutoff_Q + 1; n < 1000000; ++n) {
    // first-order sets: at most 2L|l|_1/m + 3 values of h, each of measure <= cap * trans
    double term = shell_count(nu, n) * (2.0 * box.L * n / d.m + 3.0) * 8.0 * gamma * std::pow(double(n), -opt.tau - 1.0) * trans;
    tq += term;
    if (term < 1e-17 * tq) break;
  }
  for (int n = opt.cutoff_R + 1; n < 1000000; ++n) {
    // second-order sets at |l|_1 = n: list min(|j|,|k|) <= J, slabs above; J chosen to minimize the bound
    const double delta = 2.0 * eta_R * std::pow(double(n), -opt.tau);
    const int w = pair_width(n, box, d.m, rho, delta);
    const double per = 8.0 * eta_R * std::pow(double(n), -opt.tau - 1.0) * trans;
    double best = 1e300;
    for (double J = std::max(2.0, 2.0 * (2.0 * box.L * n + delta + 2.0 * rho) / (2.0 * d.m) + 1.0); J < 1e12; J *= 1.25) {
      double listed = 2.0 * (2.0 * J + 1.0) * (2.0 * w + 1.0) * per;
      // sum over 0 < |h| <= w of the slab half widths, in closed form
      double hw = 2.0 * w * (2.0 * eta_R * std::pow(double(n), -opt.tau) + 2.0 * rho / J) + 3.0 * d.m * w * (w + 1.0) / (J * J);
      double slabs = 2.0 * hw / std::sqrt(double(n) * n / nu) * trans;
      best = std::min(best, listed + slabs);
    }
    double term = shell_count(nu, n) * best;
    tr += term;
    if (term < 1e-17 * tr) break;
  }
  return tq + tr;
}

MeasureTable excluded_measure(const std::vector<double>& gammas, const DModel& d, const Box& box,
                              const MeasureOptions& opt) {
  MeasureTable t;
  for (double g : gammas) {
    MeasureRow row = union_measure(g, d, box, opt);
    if (opt.tail_tol > 0.0 && row.tail_bound > opt.tail_tol) {
      // find cutoffs that would meet the tolerance
      MeasureOptions o = opt;
      for (int it = 0; it < 20 && tail_bound(g, d, box, o) > opt.tail_tol; ++it) {
        o.cutoff_Q *= 2;
        o.cutoff_R += 2;
        o.j_cutoff *= 2;
      }
      throw ConfigError("excluded_measure: tail bound " + std::to_string(row.tail_bound) + " above tolerance at gamma=" +
                        std::to_string(g) + "; required cutoffs at least cutoff_Q=" + std::to_string(o.cutoff_Q) +
                        ", cutoff_R=" + std::to_string(o.cutoff_R) + ", j_cutoff=" + std::to_string(o.j_cutoff));
    }
    t.rows.push_back(row);
  }
  if (t.rows.size() >= 2) {
    double mx = 0, my = 0;
    std::size_t n = 0;
    for (const auto& r : t.rows)
      if (r.measure > 0) mx += std::log(r.gamma), my += std::log(r.measure), ++n;
    if (n >= 2) {
      mx /= n;
      my /= n;
      double sxy = 0, sxx = 0;
      for (const auto& r : t.rows)
        if (r.measure > 0) {
          double x = std::log(r.gamma) - mx, y = std::log(r.measure) - my;
          sxy += x * y;
          sxx += x * x;
        }
      t.slope = sxy / sxx;
    }
    double lo = 1e300, hi = 0;
    for (const auto& r : t.rows) lo = std::min(lo, r.measure_over_gamma), hi = std::max(hi, r.measure_over_gamma);
    t.ratio_variation = lo > 0 ? (hi - lo) / lo : 0.0;
  }
  return t;
}

}  // namespace qpr
