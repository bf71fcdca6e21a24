// SPDX-License-Identifier: Apache-2.0
#pragma once

// Numerical checkers for the profile assumptions and MSE orderings, the
// majorization lemma behind them, and real-multiplication accounting.

#include "dce/channel.hpp"
#include "dce/distributed.hpp"
#include "dce/estimators.hpp"
#include "dce/rng.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace dce {

// ---------------------------------------------------------------------------
// Profile assumptions
// ---------------------------------------------------------------------------

struct AssumptionVerdict {
  double max_full = 0.0, max_other = 0.0;
  double min_full = 0.0, min_other = 0.0;
  bool holds = false;
  bool strict = false;
};

inline AssumptionVerdict compare_extremes(const RMat& full, const RMat& other) {
  require(full.size() > 0 && other.size() > 0, "assumption check: empty profile");
  AssumptionVerdict v;
  v.max_full = full.maxCoeff();
  v.min_full = full.minCoeff();
  v.max_other = other.maxCoeff();
  v.min_other = other.minCoeff();
  v.holds = v.max_full >= v.max_other && v.min_full <= v.min_other;
  v.strict = v.max_full > v.max_other && v.min_full < v.min_other;
  return v;
}

/// The angle-delay profile is at least as peaked as the antenna-frequency one.
inline AssumptionVerdict check_assumption1(const RMat& r_h_ad, const RMat& r_h) {
  require(r_h_ad.rows() == r_h.rows() && r_h_ad.cols() == r_h.cols(), "check_assumption1: shape mismatch");
  require_profile(r_h_ad, "check_assumption1");
  require_profile(r_h, "check_assumption1");
  return compare_extremes(r_h_ad, r_h);
}

struct Assumption2Verdict {
  std::vector<AssumptionVerdict> clusters;
  bool holds = false;
};

/// The global angle-delay profile is at least as peaked as every local one.
inline Assumption2Verdict check_assumption2(const RMat& r_h_ad, const std::vector<RMat>& local) {
  require(!local.empty(), "check_assumption2: no local profiles");
  require(r_h_ad.rows() % static_cast<Index>(local.size()) == 0, "check_assumption2: cluster count must divide N_R");
  const Index n_r = r_h_ad.rows() / static_cast<Index>(local.size());
  require_profile(r_h_ad, "check_assumption2");
  Assumption2Verdict out;
  out.holds = true;
  for (const auto& r : local) {
    require(r.rows() == n_r && r.cols() == r_h_ad.cols(), "check_assumption2: shape mismatch");
    require_profile(r, "check_assumption2");
    out.clusters.push_back(compare_extremes(r_h_ad, r));
    out.holds = out.holds && out.clusters.back().holds;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Majorization lemma
// ---------------------------------------------------------------------------

struct Lemma2Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;          // lhs <= rhs (with a 1e-12 relative slack)
  bool preconditions = false;  // ascending, positive, equal sums, a_1 <= b_1, a_K >= b_K
  bool majorized = false;      // a majorizes b: ascending prefix sums of a never exceed those of b
};

/// Evaluates sum f(a_k) against sum f(b_k). Preconditions are reported, not
/// asserted. The endpoint conditions alone do not force the inequality; it
/// does hold whenever a majorizes b (Karamata), which is also reported.
inline Lemma2Result lemma2_check(const std::vector<double>& a, const std::vector<double>& b,
                                 const std::function<double(double)>& f) {
  require(!a.empty() && a.size() == b.size(), "lemma2_check: sequences must be non-empty and of equal length");
  Lemma2Result r;
  for (std::size_t k = 0; k < a.size(); ++k) {
    r.lhs += f(a[k]);
    r.rhs += f(b[k]);
  }
  r.holds = r.lhs <= r.rhs + 1e-12 * std::max(1.0, std::abs(r.rhs));
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  const bool sorted = std::is_sorted(a.begin(), a.end()) && std::is_sorted(b.begin(), b.end());
  const bool positive = *std::min_element(a.begin(), a.end()) > 0.0 && *std::min_element(b.begin(), b.end()) > 0.0;
  const bool sums = std::abs(sa - sb) <= 1e-9 * std::max(1.0, std::abs(sa));
  // endpoints get the same rounding slack as the prefix sums below
  const double slack = 1e-12 * std::max(1.0, std::abs(sb));
  r.preconditions = sorted && positive && sums && a.front() <= b.front() + slack && a.back() >= b.back() - slack;
  // with both ascending: a majorizes b iff every prefix sum of a is <= that of b
  r.majorized = sorted && sums;
  double pa = 0.0, pb = 0.0;
  for (std::size_t k = 0; k + 1 < a.size() && r.majorized; ++k) {
    pa += a[k];
    pb += b[k];
    r.majorized = pa <= pb + 1e-12 * std::max(1.0, std::abs(pb));
  }
  return r;
}

inline Lemma2Result lemma2_check(const std::vector<double>& a, const std::vector<double>& b, double sigma2 = 1.0) {
  return lemma2_check(a, b, [sigma2](double x) { return mmse_term(x, sigma2); });
}

/// Random instance (a, b) satisfying the lemma's preconditions, built by
/// moving mass between entries of b so that the result is more spread out
/// (a chain of Robin-Hood transfers in reverse).
inline std::pair<std::vector<double>, std::vector<double>> lemma2_instance(Rng& rng, std::size_t k) {
  require(k >= 1, "lemma2_instance: length must be positive");
  std::vector<double> b(k);
  for (auto& x : b) x = 0.05 + 3.0 * rng.uniform();
  std::sort(b.begin(), b.end());
  std::vector<double> a = b;
  const std::size_t moves = 1 + static_cast<std::size_t>(rng.below(3 * k));
  for (std::size_t s = 0; s < moves && k >= 2; ++s) {
    std::sort(a.begin(), a.end());
    auto i = static_cast<std::size_t>(rng.below(k));
    auto j = static_cast<std::size_t>(rng.below(k));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    // take from the smaller entry, give to the larger one, keep positivity
    const double delta = rng.uniform() * 0.9 * a[i];
    a[i] -= delta;
    a[j] += delta;
  }
  std::sort(a.begin(), a.end());
  // re-balance rounding so the sums agree exactly enough
  const double diff = std::accumulate(b.begin(), b.end(), 0.0) - std::accumulate(a.begin(), a.end(), 0.0);
  a.back() += diff;
  return {a, b};
}

// ---------------------------------------------------------------------------
// MSE orderings
// ---------------------------------------------------------------------------

enum class TheoremStatus { holds, violated, assumption_failed };

inline const char* to_string(TheoremStatus s) {
  switch (s) {
    case TheoremStatus::holds: return "holds";
    case TheoremStatus::violated: return "violated";
    default: return "assumption-failed";
  }
}

struct Theorem1Result {
  double mse_c = 0.0;   // angle-delay DMMSE
  double mse_af = 0.0;  // antenna-frequency DMMSE
  TheoremStatus status = TheoremStatus::assumption_failed;
  bool holds() const { return status == TheoremStatus::holds; }
};

/// Slack for comparing two closed-form sums that may be equal in exact
/// arithmetic.
inline bool leq_with_slack(double a, double b) { return a <= b + 1e-10 * std::max(1.0, std::abs(b)); }

inline Theorem1Result verify_theorem1(const PowerProfile& p, double sigma2) {
  Theorem1Result r;
  r.mse_c = closed_form_mse(p.r_h_ad, sigma2);
  r.mse_af = closed_form_mse(p.r_h, sigma2);
  if (!check_assumption1(p.r_h_ad, p.r_h).holds) return r;
  r.status = leq_with_slack(r.mse_c, r.mse_af) ? TheoremStatus::holds : TheoremStatus::violated;
  return r;
}

struct Theorem2Row {
  Index m = 1;
  double mse_c = 0.0;
  double mse_fd = 0.0;
  double gap = 0.0;  // mse_fd - mse_c
  TheoremStatus status = TheoremStatus::assumption_failed;
  bool holds() const { return status == TheoremStatus::holds; }
};

/// Profiles for each M are derived from `local_for_m(M)`.
inline std::vector<Theorem2Row> verify_theorem2(const RMat& r_h_ad, double sigma2, const std::vector<Index>& m_values,
                                                const std::function<std::vector<RMat>(Index)>& local_for_m) {
  std::vector<Theorem2Row> out;
  const double mse_c = closed_form_mse(r_h_ad, sigma2);
  for (Index m : m_values) {
    const auto local = local_for_m(m);
    Theorem2Row row;
    row.m = m;
    row.mse_c = mse_c;
    for (const auto& r : local) row.mse_fd += closed_form_mse(r, sigma2);
    row.gap = row.mse_fd - row.mse_c;
    if (check_assumption2(r_h_ad, local).holds)
      row.status = leq_with_slack(row.mse_c, row.mse_fd) ? TheoremStatus::holds : TheoremStatus::violated;
    out.push_back(row);
  }
  return out;
}

/// Exact-profile variant on a scenario.
inline std::vector<Theorem2Row> verify_theorem2(const ChannelScenario& sc, double sigma2,
                                                const std::vector<Index>& m_values) {
  return verify_theorem2(sc.variance, sigma2, m_values, [&](Index m) {
    const auto t = make_transforms(sc.params.n_r_total, sc.params.n_c, m);
    return exact_power_profile(sc, t).r_h_ad_local;
  });
}

// ---------------------------------------------------------------------------
// Real-multiplication complexity
// ---------------------------------------------------------------------------

struct ComplexityReport {
  double centralized = 0.0;
  double fd = 0.0;
  double age_central = 0.0;
  double age_local = 0.0;
  double eag_central = 0.0;
  double eag_local = 0.0;

  double age_total() const { return age_central + age_local; }
  double eag_total() const { return eag_central + eag_local; }
  double age_rt() const { return age_total() / centralized; }
  double eag_rt() const { return eag_total() / centralized; }
  double age_rdn() const { return age_total() > 0 ? age_central / age_total() : 0.0; }
  double eag_rdn() const { return eag_total() > 0 ? eag_central / eag_total() : 0.0; }
};

/// Closed-form counts. `nbar_c` is the number of columns handled centrally and
/// `nbar_r` the row count entering the uplink-block term, both taken as given
/// (real-valued inputs are allowed).
inline ComplexityReport complexity_counts(double n_R, double n_C, double n_r, double nbar_c, double nbar_r) {
  require(n_R > 0 && n_C > 0 && n_r > 0 && n_r <= n_R, "complexity_counts: sizes must be positive with N_r <= N_R");
  require(nbar_c >= 0 && nbar_c <= n_C, "complexity_counts: nbar_c must be in [0, N_C]");
  require(nbar_r >= 0 && nbar_r <= n_R, "complexity_counts: nbar_r must be in [0, N_R]");
  ComplexityReport c;
  c.centralized = 8 * n_R * n_R * n_C + 8 * n_R * n_C * n_C + 2 * n_R * n_C;
  c.fd = 8 * n_r * n_R * n_C + 8 * n_R * n_C * n_C + 2 * n_R * n_C;
  c.age_central = 4 * n_R * n_R * nbar_c + 2 * n_R * nbar_c + 4 * n_R * n_R * nbar_c;
  c.age_local = 4 * n_R * n_C * n_C + 4 * n_R * n_C * n_C + (8 * n_r * n_R + 2 * n_R) * (n_C - nbar_c);
  c.eag_central = 4 * n_R * nbar_r * nbar_c + 4 * n_R * n_R * nbar_c + 2 * n_R * nbar_c + 4 * n_R * n_R * nbar_c;
  c.eag_local = 4 * n_r * n_R * n_C + 4 * n_R * n_C * n_C + 2 * n_R * n_C + 4 * n_r * n_R * nbar_c +
                4 * n_r * n_R * n_C + 4 * n_R * n_C * n_C;
  return c;
}

/// Counters collected from instrumented runs of each scheme.
struct RunTrace {
  MulCounter centralized, fd, age, eag;
};

inline ComplexityReport measured_complexity(const RunTrace& tr) {
  ComplexityReport c;
  c.centralized = static_cast<double>(tr.centralized.total());
  c.fd = static_cast<double>(tr.fd.total());
  c.age_central = static_cast<double>(tr.age.central);
  c.age_local = static_cast<double>(tr.age.local);
  c.eag_central = static_cast<double>(tr.eag.central);
  c.eag_local = static_cast<double>(tr.eag.local);
  return c;
}

/// Runs every scheme once on random data with forced masks: all nodes keep
/// the same `nbar_c` columns, and in EAG the same `rows_per_node` local rows.
inline RunTrace instrumented_run(Index n_R, Index n_C, Index m_clusters, Index nbar_c, Index rows_per_node, Rng& rng) {
  const auto t = make_transforms(n_R, n_C, m_clusters);
  const Index n_r = t.n_local();
  require(nbar_c >= 0 && nbar_c <= n_C && rows_per_node >= 0 && rows_per_node <= n_r,
          "instrumented_run: selection sizes out of range");
  CMat y(n_R, n_C);
  for (Index i = 0; i < n_R; ++i)
    for (Index j = 0; j < n_C; ++j) y(i, j) = rng.complex_normal(1.0);
  PowerProfile p;
  p.r_h = RMat::Constant(n_R, n_C, 1.0);
  p.r_h_ad = RMat::Constant(n_R, n_C, 1.0);
  p.r_h_ad_local.assign(static_cast<std::size_t>(m_clusters), RMat::Constant(n_r, n_C, 1.0));
  const double sigma2 = 0.5;

  // random column / row subsets shared by every node
  std::vector<Index> perm(static_cast<std::size_t>(n_C));
  std::iota(perm.begin(), perm.end(), 0);
  for (Index i = n_C - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  const std::vector<Index> cols(perm.begin(), perm.begin() + nbar_c);
  std::vector<Index> rperm(static_cast<std::size_t>(n_r));
  std::iota(rperm.begin(), rperm.end(), 0);
  for (Index i = n_r - 1; i > 0; --i)
    std::swap(rperm[static_cast<std::size_t>(i)], rperm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  const std::vector<Index> rows(rperm.begin(), rperm.begin() + rows_per_node);

  RunTrace tr;
  dmmse_ad(y, p, sigma2, t, &tr.centralized);
  const auto views = split_rows(y, m_clusters);
  dmmse_fd(views, p, sigma2, t, &tr.fd);

  std::vector<AgeLocalWindow> aw;
  for (const auto& v : views) aw.push_back(age_window_from_selection(cmul(v, t.freq.adjoint, &tr.age, Site::local), cols));
  age_run_windows(aw, p, p.r_h_ad, sigma2, 0.5, TopologyKind::star, t, &tr.age);

  std::vector<EagLocalWindow> ew;
  for (std::size_t m = 0; m < views.size(); ++m)
    ew.push_back(eag_window_from_selection(local_dmmse_ad(views[m], p.r_h_ad_local[m], sigma2, t, &tr.eag), rows, cols));
  eag_run_windows(ew, p.r_h_ad, RMat::Constant(n_R, n_C, 2.0), sigma2, 0.5, TopologyKind::star, t, &tr.eag);
  return tr;
}

/// Reference ratios (total, destination-node share) per cell, for AGE and EAG.
struct TableCell {
  Index m = 2;
  Index nbar_divisor = 100;  // nbar_c = N_C / divisor
  double age_rt, eag_rt, age_rdn, eag_rdn;
};

inline const std::vector<TableCell>& published_ratio_table() {
  static const std::vector<TableCell> cells = {
      {2, 100, 0.901, 0.903, 0.0022, 0.0028}, {4, 100, 0.851, 0.853, 0.0024, 0.0029},
      {8, 100, 0.827, 0.828, 0.0024, 0.0030}, {16, 100, 0.814, 0.815, 0.0025, 0.0031},
      {2, 20, 0.905, 0.915, 0.0111, 0.0137},  {4, 20, 0.857, 0.863, 0.0117, 0.0145},
      {8, 20, 0.834, 0.838, 0.0120, 0.0149},  {16, 20, 0.822, 0.825, 0.0122, 0.0152},
      {2, 10, 0.910, 0.930, 0.0220, 0.0269},  {4, 10, 0.867, 0.877, 0.0231, 0.0285},
      {8, 10, 0.842, 0.851, 0.0238, 0.0294},  {16, 10, 0.831, 0.838, 0.0241, 0.0299},
      {2, 5, 0.920, 0.960, 0.0435, 0.0521},   {4, 5, 0.880, 0.905, 0.0445, 0.0553},
      {8, 5, 0.860, 0.877, 0.0455, 0.0570},   {16, 5, 0.850, 0.864, 0.0471, 0.0579},
  };
  return cells;
}

inline constexpr double kRatioTolerance = 0.005;
inline constexpr double kShareTolerance = 0.0005;

struct RatioComparison {
  TableCell reference;
  ComplexityReport computed;
  bool age_rt_ok = false, eag_rt_ok = false, age_rdn_ok = false, eag_rdn_ok = false;
  bool ok() const { return age_rt_ok && eag_rt_ok && age_rdn_ok && eag_rdn_ok; }
};

/// Evaluates each published cell at N_R = 256, N_C = 1024 with fractional
/// nbar_c and the uplink-block row term taken as half of N_R.
inline std::vector<RatioComparison> reproduce_ratio_table(double n_R = 256, double n_C = 1024) {
  std::vector<RatioComparison> out;
  for (const auto& cell : published_ratio_table()) {
    RatioComparison c;
    c.reference = cell;
    c.computed = complexity_counts(n_R, n_C, n_R / static_cast<double>(cell.m), n_C / static_cast<double>(cell.nbar_divisor),
                                   n_R / 2.0);
    c.age_rt_ok = std::abs(c.computed.age_rt() - cell.age_rt) <= kRatioTolerance;
    c.eag_rt_ok = std::abs(c.computed.eag_rt() - cell.eag_rt) <= kRatioTolerance;
    c.age_rdn_ok = std::abs(c.computed.age_rdn() - cell.age_rdn) <= kShareTolerance;
    c.eag_rdn_ok = std::abs(c.computed.eag_rdn() - cell.eag_rdn) <= kShareTolerance;
    out.push_back(c);
  }
  return out;
}

/// CSV with one row per (nbar_c, M) cell.
inline void write_complexity_csv(std::ostream& os, double n_R, double n_C, const std::vector<Index>& m_values,
                                 const std::vector<double>& nbar_values, double nbar_r) {
  os << "nbar_c,m,age_rt,age_rdn,eag_rt,eag_rdn\n";
  const auto old = os.precision(6);
  for (double nb : nbar_values)
    for (Index m : m_values) {
      require(m >= 1 && static_cast<Index>(n_R) % m == 0, "complexity table: M must divide N_R");
      const auto c = complexity_counts(n_R, n_C, n_R / static_cast<double>(m), nb, nbar_r);
      os << nb << ',' << m << ',' << c.age_rt() << ',' << c.age_rdn() << ',' << c.eag_rt() << ',' << c.eag_rdn()
         << '\n';
    }
  os.precision(old);
}

}  // namespace dce
