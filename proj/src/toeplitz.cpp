#include "qpr/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "qpr/errors.hpp"
#include "qpr/fft.hpp"

namespace qpr {

namespace {

std::vector<int> phi_dims(int nu, int M) { return std::vector<int>(nu, M); }

}  // namespace

ToeplitzOperator::ToeplitzOperator(const Lattice& l) : lat(l), data(l.n_ell() * l.n_j() * l.n_j(), cd(0.0)) {}

ToeplitzOperator ToeplitzOperator::identity(const Lattice& l) {
  ToeplitzOperator A(l);
  A.slab(l.zero()).setIdentity();
  return A;
}

ToeplitzOperator ToeplitzOperator::diagonal(const Lattice& l, const std::function<cd(int)>& f) {
  ToeplitzOperator A(l);
  for (int j = -l.j_max; j <= l.j_max; ++j) A.at(l.zero(), j, j) = f(j);
  return A;
}

ToeplitzOperator ToeplitzOperator::multiplication(const TorusFunction& a) {
  const Lattice& l = a.lat;
  ToeplitzOperator A(l);
  for (std::size_t li = 0; li < l.n_ell(); ++li)
    for (int j = -l.j_max; j <= l.j_max; ++j)
      for (int jp = -l.j_max; jp <= l.j_max; ++jp) {
        int k = j - jp;
        if (std::abs(k) > l.j_max) continue;
        A.at(li, j, jp) = a.at(li, k);
      }
  return A;
}

ToeplitzOperator& ToeplitzOperator::operator+=(const ToeplitzOperator& o) {
  if (lat != o.lat) throw Error("operator sum: incompatible truncations");
  for (std::size_t k = 0; k < data.size(); ++k) data[k] += o.data[k];
  return *this;
}
ToeplitzOperator& ToeplitzOperator::operator-=(const ToeplitzOperator& o) {
  if (lat != o.lat) throw Error("operator difference: incompatible truncations");
  for (std::size_t k = 0; k < data.size(); ++k) data[k] -= o.data[k];
  return *this;
}
ToeplitzOperator& ToeplitzOperator::operator*=(cd s) {
  for (auto& v : data) v *= s;
  return *this;
}
ToeplitzOperator operator+(ToeplitzOperator a, const ToeplitzOperator& b) { return a += b; }
ToeplitzOperator operator-(ToeplitzOperator a, const ToeplitzOperator& b) { return a -= b; }
ToeplitzOperator operator*(cd s, ToeplitzOperator a) { return a *= s; }

double ToeplitzOperator::max_abs() const {
  double m = 0.0;
  for (const auto& v : data) m = std::max(m, std::abs(v));
  return m;
}

void ToeplitzOperator::drop_zero_mode() {
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    auto S = slab(li);
    S.row(lat.jj(0)).setZero();
    S.col(lat.jj(0)).setZero();
  }
}

ToeplitzOperator ToeplitzOperator::resized(const Lattice& other) const {
  if (other.nu != lat.nu) throw Error("resized: nu mismatch");
  ToeplitzOperator r(other);
  int jm = std::min(lat.j_max, other.j_max);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    std::size_t lo = other.index(lat.ell(li));
    if (lo == Lattice::npos) continue;
    for (int j = -jm; j <= jm; ++j)
      for (int jp = -jm; jp <= jm; ++jp) r.at(lo, j, jp) = at(li, j, jp);
  }
  return r;
}

std::vector<double> OpGrid::phi(std::size_t k) const {
  std::vector<double> p(lat.nu);
  for (int d = lat.nu - 1; d >= 0; --d) {
    p[d] = 2.0 * M_PI * static_cast<double>(k % M) / M;
    k /= M;
  }
  return p;
}

int op_grid(const Lattice& lat) { return 3 * lat.l_max + 1; }

OpGrid empty_grid(const Lattice& lat, int M) {
  OpGrid g;
  g.lat = lat;
  g.M = M;
  g.nodes = grid_count(M, lat.nu);
  g.data.assign(g.nodes * lat.n_j() * lat.n_j(), cd(0.0));
  return g;
}

OpGrid to_grid(const ToeplitzOperator& A, int M) {
  if (M < A.lat.side()) throw Error("to_grid: phi grid smaller than the box");
  OpGrid g = empty_grid(A.lat, M);
  const std::size_t ss = A.slab_size();
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li) {
    std::size_t node = grid_node(A.lat, li, M);
    std::copy(A.data.begin() + li * ss, A.data.begin() + (li + 1) * ss, g.data.begin() + node * ss);
  }
  dft(g.data.data(), phi_dims(A.lat.nu, M), static_cast<int>(ss), static_cast<int>(ss), 1, +1);
  return g;
}

ToeplitzOperator from_grid(OpGrid g) {
  const std::size_t ss = static_cast<std::size_t>(g.n()) * g.n();
  dft(g.data.data(), phi_dims(g.lat.nu, g.M), static_cast<int>(ss), static_cast<int>(ss), 1, -1);
  ToeplitzOperator A(g.lat);
  double scale = 1.0 / static_cast<double>(g.nodes);
  for (std::size_t li = 0; li < g.lat.n_ell(); ++li) {
    std::size_t node = grid_node(g.lat, li, g.M);
    for (std::size_t e = 0; e < ss; ++e) A.data[li * ss + e] = g.data[node * ss + e] * scale;
  }
  return A;
}

OpGrid grid_product(const OpGrid& a, const OpGrid& b) {
  if (a.lat != b.lat || a.M != b.M) throw Error("grid_product: incompatible grids");
  OpGrid c = empty_grid(a.lat, a.M);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(a.nodes); ++k) c.node(k).noalias() = a.node(k) * b.node(k);
  return c;
}

ToeplitzOperator compose(const ToeplitzOperator& A, const ToeplitzOperator& B) {
  if (A.lat != B.lat) throw Error("compose: incompatible truncations");
  int M = op_grid(A.lat);
  return from_grid(grid_product(to_grid(A, M), to_grid(B, M)));
}

ToeplitzOperator commutator(const ToeplitzOperator& A, const ToeplitzOperator& B) {
  int M = op_grid(A.lat);
  OpGrid ga = to_grid(A, M), gb = to_grid(B, M);
  OpGrid c = empty_grid(A.lat, M);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(c.nodes); ++k) {
    c.node(k).noalias() = ga.node(k) * gb.node(k);
    c.node(k).noalias() -= gb.node(k) * ga.node(k);
  }
  return from_grid(std::move(c));
}

TorusFunction apply(const ToeplitzOperator& A, const TorusFunction& u) { return apply(to_grid(A, op_grid(A.lat)), u); }

TorusFunction apply(const OpGrid& g, const TorusFunction& u0) {
  const Lattice& lat = g.lat;
  TorusFunction u = (u0.lat == lat) ? u0 : u0.resized(lat);
  const int M = g.M;
  auto un = phi_nodes(u, M);
  const int nj = lat.n_j();
  std::vector<cd> out(un.size());
  for (std::size_t k = 0; k < g.nodes; ++k) {
    Eigen::Map<Eigen::VectorXcd> y(out.data() + k * nj, nj);
    Eigen::Map<const Eigen::VectorXcd> x(un.data() + k * nj, nj);
    y.noalias() = g.node(k) * x;
  }
  dft(out.data(), phi_dims(lat.nu, M), nj, nj, 1, -1);
  TorusFunction r(lat);
  double scale = 1.0 / static_cast<double>(g.nodes);
  for (std::size_t li = 0; li < lat.n_ell(); ++li) {
    std::size_t node = grid_node(lat, li, M);
    for (int jj = 0; jj < nj; ++jj) r.c[static_cast<Eigen::Index>(li * nj + jj)] = out[node * nj + jj] * scale;
  }
  return r;
}

namespace {

// per-node multi-index of the DFT bin
std::vector<int> bin_index(std::size_t node, int nu, int M) {
  std::vector<int> l(nu);
  for (int d = nu - 1; d >= 0; --d) {
    l[d] = freq(static_cast<int>(node % M), M);
    node /= M;
  }
  return l;
}

}  // namespace

OpGrid omega_dphi(const OpGrid& g, const std::vector<double>& omega) {
  OpGrid r = g;
  const std::size_t ss = static_cast<std::size_t>(g.n()) * g.n();
  dft(r.data.data(), phi_dims(g.lat.nu, g.M), static_cast<int>(ss), static_cast<int>(ss), 1, -1);
  for (std::size_t k = 0; k < r.nodes; ++k) {
    auto l = bin_index(k, g.lat.nu, g.M);
    double w = 0.0;
    bool nyquist = false;
    for (int d = 0; d < g.lat.nu; ++d) {
      w += omega[d] * l[d];
      if (2 * std::abs(l[d]) == g.M) nyquist = true;
    }
    cd f = nyquist ? cd(0.0) : I * w / static_cast<double>(r.nodes);
    for (std::size_t e = 0; e < ss; ++e) r.data[k * ss + e] *= f;
  }
  dft(r.data.data(), phi_dims(g.lat.nu, g.M), static_cast<int>(ss), static_cast<int>(ss), 1, +1);
  return r;
}

double grid_tail(const OpGrid& g) {
  OpGrid r = g;
  const std::size_t ss = static_cast<std::size_t>(g.n()) * g.n();
  dft(r.data.data(), phi_dims(g.lat.nu, g.M), static_cast<int>(ss), static_cast<int>(ss), 1, -1);
  double top = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < r.nodes; ++k) {
    auto l = bin_index(k, g.lat.nu, g.M);
    bool outer = false;
    for (int v : l) outer = outer || 3 * std::abs(v) > g.M;
    double mx = r.node(k).cwiseAbs().maxCoeff();
    top = std::max(top, mx);
    if (outer) tail = std::max(tail, mx);
  }
  return top > 0 ? tail / top : 0.0;
}

ToeplitzOperator omega_dphi(const ToeplitzOperator& A, const std::vector<double>& omega) {
  ToeplitzOperator r = A;
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li) r.slab(li) *= I * A.lat.omega_dot(omega, li);
  return r;
}

Eigen::MatrixXcd evaluate_at(const ToeplitzOperator& A, const std::vector<double>& phi) {
  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(A.n(), A.n());
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li) {
    double arg = 0.0;
    for (int d = 0; d < A.lat.nu; ++d) arg += A.lat.ell(li)[d] * phi[d];
    R += std::exp(I * arg) * A.slab(li);
  }
  return R;
}

ToeplitzOperator project_and_weight(const ToeplitzOperator& A, Projection mode, int K, double b) {
  ToeplitzOperator r = A;
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li) {
    int l1 = A.lat.ell_l1(li);
    switch (mode) {
      case Projection::Low:
        if (K >= 0 && l1 > K) r.slab(li).setZero();
        break;
      case Projection::High:
        if (K < 0 || l1 <= K) r.slab(li).setZero();
        break;
      case Projection::Weight:
        r.slab(li) *= std::pow(bracket_l(l1), b);
        break;
    }
  }
  return r;
}

ToeplitzOperator diagonal_average(const ToeplitzOperator& A) {
  ToeplitzOperator r(A.lat);
  std::size_t z = A.lat.zero();
  for (int j = -A.lat.j_max; j <= A.lat.j_max; ++j) r.at(z, j, j) = A.at(z, j, j);
  return r;
}

namespace {

// y = T x with T Toeplitz given on a grid, x and y on window lattices
struct GridConv {
  OpGrid g;
  Lattice full;
  Lattice win;
  std::vector<cd> buf;

  void run(const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const int nj = full.n_j();
    const int wnj = win.n_j();
    std::fill(buf.begin(), buf.end(), cd(0.0));
    for (std::size_t li = 0; li < win.n_ell(); ++li) {
      std::size_t node = grid_node(win, li, g.M);
      for (int j = -win.j_max; j <= win.j_max; ++j)
        buf[node * nj + full.jj(j)] = x[static_cast<Eigen::Index>(li * wnj + win.jj(j))];
    }
    std::vector<int> dims(full.nu, g.M);
    dft(buf.data(), dims, nj, nj, 1, +1);
    Eigen::VectorXcd tmp(nj);
    for (std::size_t k = 0; k < g.nodes; ++k) {
      Eigen::Map<Eigen::VectorXcd> v(buf.data() + k * nj, nj);
      tmp.noalias() = g.node(k) * v;
      v = tmp;
    }
    dft(buf.data(), dims, nj, nj, 1, -1);
    double scale = 1.0 / static_cast<double>(g.nodes);
    for (std::size_t li = 0; li < win.n_ell(); ++li) {
      std::size_t node = grid_node(win, li, g.M);
      for (int j = -win.j_max; j <= win.j_max; ++j)
        y[static_cast<Eigen::Index>(li * wnj + win.jj(j))] = buf[node * nj + full.jj(j)].real() * scale;
    }
  }
};

ToeplitzOperator abs_op(const ToeplitzOperator& A, bool transpose) {
  ToeplitzOperator r(A.lat);
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li) {
    if (transpose)
      r.slab(li) = A.slab(A.lat.neg(li)).cwiseAbs().cast<cd>().transpose();
    else
      r.slab(li) = A.slab(li).cwiseAbs().cast<cd>();
  }
  return r;
}

}  // namespace

double schur_bound(const ToeplitzOperator& A) {
  const Lattice& lat = A.lat;
  std::vector<double> row(lat.n_j(), 0.0), col(lat.n_j(), 0.0);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j)
      for (int jp = -lat.j_max; jp <= lat.j_max; ++jp) {
        double v = std::abs(A.at(li, j, jp));
        row[lat.jj(j)] += v;
        col[lat.jj(jp)] += v;
      }
  return std::sqrt(*std::max_element(row.begin(), row.end()) * *std::max_element(col.begin(), col.end()));
}

double majorant_norm(const ToeplitzOperator& A, const MajorantOptions& opt) {
  const Lattice& lat = A.lat;
  int lw = opt.l_window < 0 ? lat.l_max : std::min(opt.l_window, lat.l_max);
  int jw = opt.j_window < 0 ? lat.j_max : std::min(opt.j_window, lat.j_max);
  if (A.max_abs() == 0.0) return 0.0;
  Lattice win(lat.nu, lw, jw);
  int M = std::max(2 * lw + lat.l_max + 1, lat.side());
  GridConv fwd{to_grid(abs_op(A, false), M), lat, win, {}};
  GridConv bwd{to_grid(abs_op(A, true), M), lat, win, {}};
  fwd.buf.resize(fwd.g.nodes * lat.n_j());
  bwd.buf.resize(bwd.g.nodes * lat.n_j());

  const auto N = static_cast<Eigen::Index>(win.size());
  Eigen::VectorXd w(N);
  for (std::size_t li = 0; li < win.n_ell(); ++li)
    for (int j = -jw; j <= jw; ++j)
      w[static_cast<Eigen::Index>(li * win.n_j() + win.jj(j))] = std::pow(bracket(win.ell_l1(li), j), opt.s);

  std::mt19937 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd v(N);
  for (Eigen::Index k = 0; k < N; ++k) v[k] = 1.0 + 0.1 * U(rng);
  v.normalize();
  Eigen::VectorXd t(N), y(N);
  double sigma = 0.0, prev = -1.0, gap = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    // y = B v, B = W |A| W^{-1}
    fwd.run(v.cwiseQuotient(w), t);
    y = t.cwiseProduct(w);
    sigma = y.norm();
    if (sigma == 0.0) return 0.0;
    // v = B^T y / |.|
    bwd.run(y.cwiseProduct(w), t);
    v = t.cwiseQuotient(w);
    double nv = v.norm();
    if (nv == 0.0) return sigma;
    v /= nv;
    gap = std::abs(sigma - prev);
    if (prev > 0.0 && gap <= opt.tol * sigma) return sigma;
    prev = sigma;
  }
  throw ConvergenceError("majorant_norm: power iteration did not converge, last gap " + std::to_string(gap),
                         {sigma, gap});
}

namespace {

// weighted entrywise-absolute operator
ToeplitzOperator weighted_abs(const ToeplitzOperator& A, const std::function<double(std::size_t, int, int)>& weight) {
  ToeplitzOperator T(A.lat);
  for (std::size_t li = 0; li < A.lat.n_ell(); ++li)
    for (int j = -A.lat.j_max; j <= A.lat.j_max; ++j)
      for (int jp = -A.lat.j_max; jp <= A.lat.j_max; ++jp)
        T.at(li, j, jp) = std::abs(A.at(li, j, jp)) * weight(li, j, jp);
  return T;
}

std::vector<TorusFunction> make_probes(const Lattice& lat, double s, const ProbeFamily& pf) {
  std::vector<TorusFunction> out;
  std::mt19937 rng(pf.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  // plane waves spread over the box
  for (int p = 0; p < pf.n_plane; ++p) {
    TorusFunction u(lat);
    std::size_t li = (p == 0) ? lat.zero() : static_cast<std::size_t>(U(rng) * lat.n_ell()) % lat.n_ell();
    int j = (p == 0) ? 1 : static_cast<int>(std::lround((2.0 * U(rng) - 1.0) * lat.j_max));
    u.at(li, j) = 1.0;
    out.push_back(u);
  }
  for (int p = 0; p < pf.n_random; ++p) {
    TorusFunction u(lat);
    double decay = s * (0.5 + U(rng));
    for (std::size_t li = 0; li < lat.n_ell(); ++li)
      for (int j = -lat.j_max; j <= lat.j_max; ++j) u.at(li, j) = U(rng) * std::pow(bracket(lat.ell_l1(li), j), -decay - 0.6);
    out.push_back(u);
  }
  return out;
}

// minimise c0 + c1 subject to y_p <= c0 b_p + c1 a_p, c >= 0
TameConstants lp_fit(const std::vector<double>& y, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::pair<double, double>> cand;
  const std::size_t P = y.size();
  for (std::size_t p = 0; p < P; ++p) {
    if (b[p] > 0) cand.push_back({y[p] / b[p], 0.0});
    if (a[p] > 0) cand.push_back({0.0, y[p] / a[p]});
    for (std::size_t q = p + 1; q < P; ++q) {
      double det = b[p] * a[q] - b[q] * a[p];
      if (std::abs(det) < 1e-300) continue;
      double c0 = (y[p] * a[q] - y[q] * a[p]) / det;
      double c1 = (b[p] * y[q] - b[q] * y[p]) / det;
      if (c0 >= 0 && c1 >= 0) cand.push_back({c0, c1});
    }
  }
  TameConstants best;
  double obj = std::numeric_limits<double>::infinity();
  for (auto [c0, c1] : cand) {
    bool ok = true;
    for (std::size_t p = 0; p < P && ok; ++p) ok = y[p] <= (c0 * b[p] + c1 * a[p]) * (1.0 + 1e-12) + 1e-300;
    if (ok && c0 + c1 < obj) {
      obj = c0 + c1;
      best.c_s0 = c0;
      best.c_s = c1;
    }
  }
  if (!std::isfinite(obj)) return best;
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < P; ++p)
    if (y[p] > 0) slack = std::min(slack, (best.c_s0 * b[p] + best.c_s * a[p] - y[p]) / y[p]);
  best.residual = std::isfinite(slack) ? slack : 0.0;
  return best;
}

}  // namespace

TameConstants tame_fit(const ToeplitzOperator& A, const std::function<double(std::size_t, int, int)>& weight,
                       double s, const ProbeFamily& pf) {
  ToeplitzOperator T = weighted_abs(A, weight);
  if (T.max_abs() == 0.0) return {};
  double s0 = SobolevIndex::s0(A.lat.nu);
  std::vector<double> y, a, b;
  OpGrid g = to_grid(T, op_grid(T.lat));
  for (const auto& u : make_probes(A.lat, s, pf)) {
    TorusFunction v = apply(g, u);
    v.c = v.c.cwiseAbs().cast<cd>();
    y.push_back(sobolev_norm(v, s));
    a.push_back(sobolev_norm(u, s0));
    b.push_back(sobolev_norm(u, s));
  }
  return lp_fit(y, a, b);
}

TameConstants modulo_tame_constant(const ToeplitzOperator& A, double s, double b0, const ProbeFamily& pf) {
  const Lattice& lat = A.lat;
  return tame_fit(
      A,
      [&](std::size_t li, int j, int jp) {
        return std::pow(bracket_l(lat.ell_l1(li)), b0) * std::sqrt(bracket_j(j) * bracket_j(jp));
      },
      s, pf);
}

double SmoothingDiagnostics::max_constant() const {
  double m = 0.0;
  for (const auto& [k, v] : table) m = std::max(m, v.value());
  return m;
}

namespace {

void multi_indices(int nu, int order, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == nu - 1) {
    cur.push_back(order);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= order; ++k) {
    cur.push_back(k);
    multi_indices(nu, order - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

SmoothingDiagnostics smoothing_constants(const ToeplitzOperator& A, int rho, int b, const std::vector<double>& s_list,
                                         const ProbeFamily& pf) {
  if (rho < 3) throw Error("smoothing_constants: rho >= 3 required");
  if (b < 0 || b > rho - 2) throw Error("smoothing_constants: b must lie in [0, rho-2]");
  SmoothingDiagnostics D;
  D.rho = rho;
  D.b = b;
  const Lattice& lat = A.lat;
  for (double s : s_list) {
    std::vector<double> mono;
    double running = 0.0;
    for (int order = 0; order <= b; ++order) {
      std::vector<std::vector<int>> bs;
      std::vector<int> cur;
      multi_indices(lat.nu, order, cur, bs);
      for (int kind = 0; kind < 2; ++kind) {
        int total = rho - order - kind;
        std::vector<int> m1s{0, total / 2, total};
        m1s.erase(std::unique(m1s.begin(), m1s.end()), m1s.end());
        for (int m1 : m1s) {
          int m2 = total - m1;
          TameConstants worst;
          for (const auto& bb : bs) {
            auto w = [&](std::size_t li, int j, int jp) {
              double f = 1.0;
              for (int d = 0; d < lat.nu; ++d) f *= std::pow(std::abs(static_cast<double>(lat.ell(li)[d])), bb[d]);
              f *= std::pow(bracket_j(j), m1) * std::pow(bracket_j(jp), m2);
              if (kind == 1) f *= std::abs(static_cast<double>(jp - j));
              return f;
            };
            TameConstants t = tame_fit(A, w, s, pf);
            if (t.value() >= worst.value()) worst = t;
          }
          D.table[{s, order, m1, kind}] = worst;
          running = std::max(running, worst.value());
        }
      }
      mono.push_back(running);
    }
    D.monotone[s] = mono;
  }
  return D;
}

StructureReport structure_check(const ToeplitzOperator& A, double tol) {
  const Lattice& lat = A.lat;
  StructureReport r;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j)
      for (int jp = -lat.j_max; jp <= lat.j_max; ++jp) {
        cd a = A.at(li, j, jp);
        r.reality_defect = std::max(r.reality_defect, std::abs(std::conj(a) - A.at(lat.neg(li), -j, -jp)));
        if (j != 0 && jp != 0) {
          cd h = a + (omega_dp(j) / omega_dp(jp)) * A.at(li, -jp, -j);
          r.hamiltonian_defect = std::max(r.hamiltonian_defect, std::abs(h));
        }
      }
  double scale = std::max(1.0, A.max_abs());
  r.is_real = r.reality_defect <= tol * scale;
  r.is_hamiltonian = r.is_real && r.hamiltonian_defect <= tol * scale;
  return r;
}

cd symplectic_form(const TorusFunction& u, const TorusFunction& v) {
  const Lattice& lat = u.lat;
  cd acc = 0.0;
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j) {
      if (j == 0) continue;
      cd ju = u.at(lat.neg(li), -j) / (I * omega_dp(-j));
      acc += ju * v.at(li, j);
    }
  return acc;
}

Eigen::MatrixXcd dense(const ToeplitzOperator& A) {
  const Lattice& lat = A.lat;
  const int nj = lat.n_j();
  const auto N = static_cast<Eigen::Index>(lat.size());
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(N, N);
  for (std::size_t a = 0; a < lat.n_ell(); ++a)
    for (std::size_t b = 0; b < lat.n_ell(); ++b) {
      std::size_t d = lat.sub(a, b);
      if (d == Lattice::npos) continue;
      D.block(static_cast<Eigen::Index>(a * nj), static_cast<Eigen::Index>(b * nj), nj, nj) = A.slab(d);
    }
  return D;
}

Eigen::VectorXcd flatten(const TorusFunction& u) { return u.c; }

void write_csv(std::ostream& os, const ToeplitzOperator& A, double drop_below) {
  const Lattice& lat = A.lat;
  for (int d = 0; d < lat.nu; ++d) os << "l" << d + 1 << ",";
  os << "j,jp,re,im\n";
  os.precision(17);
  for (std::size_t li = 0; li < lat.n_ell(); ++li)
    for (int j = -lat.j_max; j <= lat.j_max; ++j)
      for (int jp = -lat.j_max; jp <= lat.j_max; ++jp) {
        cd v = A.at(li, j, jp);
        if (std::abs(v) <= drop_below || v == cd(0.0)) continue;
        for (int d = 0; d < lat.nu; ++d) os << lat.ell(li)[d] << ",";
        os << j << "," << jp << "," << v.real() << "," << v.imag() << "\n";
      }
}

}  // namespace qpr
