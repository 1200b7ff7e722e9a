#pragma once

#include <random>
#include <string>
#include <vector>

#include "qpr/lattice.hpp"

namespace qpr {

// frozen eigenvalue model d_j = m omega(j) + r_j, r_j = 0 beyond the recorded window
struct DModel {
  double m = 1.0;
  int j_max = 0;
  std::vector<double> r;  // indexed by j + j_max
  double d(int j) const {
    double rj = (std::abs(j) <= j_max && !r.empty()) ? r[j + j_max] : 0.0;
    return m * omega_dp(j) + rj;
  }
};

// frequency box [L, 2L]^nu
struct Box {
  int nu = 2;
  double L = 1.0;
};

// R: |omega.l + d_j - d_k| < 2 eta <l>^{-sigma};  Q: |omega.l + m j| < 2 eta <l>^{-sigma}
struct BadSetSpec {
  enum class Kind { R, Q } kind = Kind::R;
  std::vector<int> ell;
  int j = 0;
  int k = 0;  // unused for Q
  double eta = 0.0;
  double sigma = 0.0;
};

// omega-independent offset c with phi(omega) = omega.l + c, and the half width 2 eta <l>^{-sigma}
double bad_set_offset(const BadSetSpec& s, const DModel& d);
double bad_set_halfwidth(const BadSetSpec& s);
// the analytic cap 8 eta <l>^{-sigma-1} on the measure of each slice along l
double slice_cap(const BadSetSpec& s);

struct SetMeasure {
  double measure = 0.0;
  double max_slice = 0.0;  // largest slice length along l-hat
  double cap = 0.0;
};

// Fubini over slices along l-hat, `lines` midpoints per transversal direction. Throws if a slice exceeds the cap.
SetMeasure bad_set_measure_1d(const BadSetSpec& spec, const DModel& d, const Box& box, int lines = 400);

// pairs (j, k), j != k, 0 < |j|, |k| <= j_range, that survive |omega(j) - omega(k)| <= 8|omega| |l|_1, |omega| = 2L
std::vector<std::pair<int, int>> prune_indices(const std::vector<int>& ell, int j_range, double L);

struct InclusionResult {
  enum class Verdict { Holds, Violated, NotApplicable, Empty } verdict = Verdict::Empty;
  std::vector<double> witness;
  int samples = 0;
  double threshold = 0.0;  // C <l>^{tau1} gamma^{-1/2}
};

// samples R_{l j k}(gamma^{3/2}, tau) and tests membership in Q_{l, j-k}(gamma, tau1)
InclusionResult inclusion_check(const std::vector<int>& ell, int j, int k, double gamma, double tau, double tau1,
                                const DModel& d, const Box& box, double C, int samples, std::mt19937_64& rng);

// smallest C for which every pair with min(|j|, |k|) >= C <l>^{tau1} gamma^{-1/2}, |j|, |k| <= j_scan, passes the sampled inclusion
double smallest_inclusion_constant(const std::vector<int>& ell, double gamma, double tau, double tau1, const DModel& d,
                                   const Box& box, int j_scan, int samples, std::mt19937_64& rng);

struct MeasureOptions {
  double tau = 10.0;     // exponent of both families in the union
  double tau1 = 4.0;     // exponent of the first-order sets in the inclusion lemma
  int cutoff_R = 4;      // |l|_1 for second-order sets
  int cutoff_Q = 30;     // |l|_1 for first-order sets
  int cutoff_zero = 30;  // |l|_1 for the Diophantine sets whose complement is O_0
  int j_cutoff = 16;     // lower bound for the listing cutoff below
  double j_scale = 10.0; // second-order sets are listed while min(|j|, |k|) <= max(j_cutoff, j_scale / sqrt(gamma)), slabs cover the rest
  int lines = 2000;      // transversal resolution per direction
  double C_incl = 1.0;   // inclusion constant reported with the table
  bool prune = true;
  double tail_tol = -1;  // error when the tail bound exceeds this; negative disables
};

struct MeasureRow {
  double gamma = 0.0;
  double L = 1.0;
  double measure = 0.0;  // |(union of bad sets) inside O_0|, within the cutoffs
  double measure_over_gamma = 0.0;
  double tail_bound = 0.0;
  double max_slice_ratio = 0.0;  // largest slice length over its cap
  std::size_t n_sets = 0;
  std::size_t n_slabs = 0;
};

struct MeasureTable {
  std::vector<MeasureRow> rows;
  double slope = 0.0;           // log-log fit of measure against gamma
  double ratio_variation = 0.0; // (max - min) / min of measure/gamma
};

int listing_cutoff(double gamma, const MeasureOptions& opt);
// union of the R and Q sets inside O_0, exact interval merging on lines parallel to the omega_1 axis
MeasureRow union_measure(double gamma, const DModel& d, const Box& box, const MeasureOptions& opt);
// analytic bound of the sets left out by the cutoffs
double tail_bound(double gamma, const DModel& d, const Box& box, const MeasureOptions& opt);
MeasureTable excluded_measure(const std::vector<double>& gammas, const DModel& d, const Box& box,
                              const MeasureOptions& opt);

}  // namespace qpr
