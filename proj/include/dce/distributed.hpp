// SPDX-License-Identifier: Apache-2.0
#pragma once

// The two distributed estimators.
//
// AGE (aggregate, then estimate): every node moves its signal to the
// antenna-delay domain, uploads the strong columns, and estimates the rest
// locally. The aggregation node sums the uploads in the global angle-delay
// domain, soft-windows them with a per-column noise level, and returns each
// node its rows of the result.
//
// EAG (estimate, then aggregate): every node runs its local angle-delay
// DMMSE first, uploads the strong row-and-column block of that estimate, and
// the aggregation node refines the sum with a ratio window before sending
// the columns back.
//
// In both, a node merges what came back with what it kept: central value
// where only the central side has support, local value where only the local
// side has it, an alpha-weighted mix where both do, and zero elsewhere.

#include "dce/channel.hpp"
#include "dce/estimators.hpp"
#include "dce/netsim.hpp"
#include "dce/payload.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace dce {

using BMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MaskKind { column_sparse, row_and_column_sparse };

/// Binary selection D = rows x cols (outer AND of two indicators). The
/// column-sparse kind always selects every row.
struct HardWindowMask {
  MaskKind kind = MaskKind::column_sparse;
  double eta = 0.0;
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> rows;  // ascending
  std::vector<Index> cols;  // ascending

  bool empty() const { return rows.empty() || cols.empty(); }

  BMat support() const {
    BMat d = BMat::Constant(n_rows, n_cols, false);
    for (Index r : rows)
      for (Index c : cols) d(r, c) = true;
    return d;
  }

  RMat d() const { return support().cast<double>(); }
};

/// Indices of columns whose squared norm reaches the threshold (">=" selects).
inline std::vector<Index> strong_columns(const CMat& x, double threshold) {
  std::vector<Index> out;
  for (Index j = 0; j < x.cols(); ++j)
    if (x.col(j).squaredNorm() >= threshold) out.push_back(j);
  return out;
}

inline std::vector<Index> strong_rows(const CMat& x, double threshold) {
  std::vector<Index> out;
  for (Index i = 0; i < x.rows(); ++i)
    if (x.row(i).squaredNorm() >= threshold) out.push_back(i);
  return out;
}

inline std::vector<Index> complement(const std::vector<Index>& sel, Index n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index k : sel) in[static_cast<std::size_t>(k)] = true;
  std::vector<Index> out;
  for (Index k = 0; k < n; ++k)
    if (!in[static_cast<std::size_t>(k)]) out.push_back(k);
  return out;
}

inline std::vector<bool> indicator(const std::vector<Index>& sel, Index n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index k : sel) {
    require(k >= 0 && k < n, "index out of range");
    in[static_cast<std::size_t>(k)] = true;
  }
  return in;
}

inline void check_alpha(double alpha) { require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]"); }

/// F_m^H F_{N_r} for every cluster (N_R x N_r): lifts a local angle-domain
/// column into the global angle domain.
inline std::vector<CMat> lift_maps(const DomainTransforms& t) {
  std::vector<CMat> out;
  for (const auto& fa : t.blocks_adjoint) out.push_back(fa * t.local.matrix);
  return out;
}

// ===========================================================================
// AGE
// ===========================================================================

struct AgeLocalWindow {
  HardWindowMask mask;
  ColumnPayload uplink;
  CMat residual;                    // unselected columns of Y_m F_C^H
  std::vector<Index> local_columns;  // I_m^(l): columns kept for local estimation
};

/// Split Y_m F_C^H into an uplink (given columns) and a residual.
inline AgeLocalWindow age_window_from_selection(const CMat& antenna_delay, const std::vector<Index>& cols,
                                                double eta = 0.0) {
  AgeLocalWindow w;
  w.mask.kind = MaskKind::column_sparse;
  w.mask.eta = eta;
  w.mask.n_rows = antenna_delay.rows();
  w.mask.n_cols = antenna_delay.cols();
  for (Index i = 0; i < antenna_delay.rows(); ++i) w.mask.rows.push_back(i);
  w.mask.cols = cols;
  std::sort(w.mask.cols.begin(), w.mask.cols.end());
  w.uplink = make_column_payload(antenna_delay, w.mask.cols);
  w.residual = antenna_delay;
  for (Index j : w.mask.cols) w.residual.col(j).setZero();
  w.local_columns = complement(w.mask.cols, antenna_delay.cols());
  return w;
}

/// Column j is uploaded iff ||[Y_m F_C^H]_j||^2 >= eta * N_r * sigma2.
inline AgeLocalWindow age_local_window(const CMat& y_m, double sigma2, double eta, const DomainTransforms& t,
                                       MulCounter* counter = nullptr) {
  require(eta >= 0.0, "age_local_window: eta must be non-negative");
  require(sigma2 >= 0.0, "age_local_window: sigma2 must be non-negative");
  require(y_m.cols() == t.n_freq(), "age_local_window: column count does not match N_C");
  const CMat z = cmul(y_m, t.freq.adjoint, counter, Site::local);
  const double threshold = eta * static_cast<double>(y_m.rows()) * sigma2;
  return age_window_from_selection(z, strong_columns(z, threshold), eta);
}

struct LocalEstimate {
  CMat g;                    // antenna-delay estimate, zero outside `columns`
  std::vector<Index> columns;  // I_m^(l)
};

/// Local DMMSE of the residual columns: each column goes to the local angle
/// domain, is soft-windowed with the node's local angle-delay profile and
/// comes back.
inline LocalEstimate age_local_estimate(const CMat& residual, const std::vector<Index>& columns,
                                        const RMat& local_profile, double sigma2, const DomainTransforms& t,
                                        MulCounter* counter = nullptr) {
  require(residual.rows() == t.n_local() && residual.cols() == t.n_freq(), "age_local_estimate: shape mismatch");
  require(local_profile.rows() == residual.rows() && local_profile.cols() == residual.cols(),
          "age_local_estimate: profile shape mismatch");
  LocalEstimate out;
  out.columns = columns;
  out.g = CMat::Zero(residual.rows(), residual.cols());
  if (columns.empty()) return out;
  const auto k = static_cast<Index>(columns.size());
  CMat sub(residual.rows(), k);
  RMat prof(residual.rows(), k);
  for (Index c = 0; c < k; ++c) {
    const Index j = columns[static_cast<std::size_t>(c)];
    require(j >= 0 && j < residual.cols(), "age_local_estimate: column index out of range");
    sub.col(c) = residual.col(j);
    prof.col(c) = local_profile.col(j);
  }
  const CMat ang = cmul(t.local.adjoint, sub, counter, Site::local);
  const CMat est = cmul(t.local.matrix, apply_window(soft_window(prof, sigma2).s, ang, counter, Site::local), counter,
                        Site::local);
  for (Index c = 0; c < k; ++c) out.g.col(columns[static_cast<std::size_t>(c)]) = est.col(c);
  return out;
}

/// Residual columns taken to be the nonzero ones.
inline LocalEstimate age_local_estimate(const CMat& residual, const RMat& local_profile, double sigma2,
                                        const DomainTransforms& t, MulCounter* counter = nullptr) {
  std::vector<Index> cols;
  for (Index j = 0; j < residual.cols(); ++j)
    if (residual.col(j).squaredNorm() > 0.0) cols.push_back(j);
  return age_local_estimate(residual, cols, local_profile, sigma2, t, counter);
}

struct AgeAggregate {
  CMat y_bar;                    // N_R x N_C, global angle-delay
  std::vector<Index> columns;    // I
  std::vector<Index> uploaders;  // per column, number of nodes that sent it
  std::vector<double> lambda;    // per column noise level, 0 outside I
};

inline AgeAggregate age_aggregate(const std::vector<ColumnPayload>& payloads, double sigma2, const DomainTransforms& t,
                                  MulCounter* counter = nullptr) {
  require(static_cast<Index>(payloads.size()) == t.clusters, "age_aggregate: one payload per node required");
  const Index n_c = t.n_freq();
  const auto m_count = static_cast<double>(t.clusters);
  AgeAggregate a;
  a.y_bar = CMat::Zero(t.n_rx(), n_c);
  a.uploaders.assign(static_cast<std::size_t>(n_c), 0);
  a.lambda.assign(static_cast<std::size_t>(n_c), 0.0);
  for (std::size_t m = 0; m < payloads.size(); ++m) {
    const auto& p = payloads[m];
    if (p.columns.empty()) continue;
    require(p.rows == t.n_local(), "age_aggregate: payload row count does not match N_r");
    const CMat lifted = cmul(t.blocks_adjoint[m], p.values, counter, Site::central);
    for (std::size_t k = 0; k < p.columns.size(); ++k) {
      const auto j = static_cast<Index>(p.columns[k]);
      require(j < n_c, "age_aggregate: column index out of range");
      a.y_bar.col(j) += lifted.col(static_cast<Index>(k));
      ++a.uploaders[static_cast<std::size_t>(j)];
    }
  }
  for (Index j = 0; j < n_c; ++j) {
    const Index u = a.uploaders[static_cast<std::size_t>(j)];
    if (u == 0) continue;
    a.columns.push_back(j);
    a.lambda[static_cast<std::size_t>(j)] = static_cast<double>(u) / m_count * sigma2;
  }
  return a;
}

struct AgeCentral {
  CMat g_tilde;                // N_R x N_C, zero outside I
  std::vector<Index> columns;  // I
  std::vector<double> mse;     // per column closed-form central MSE, 0 outside I
};

/// Column-wise soft window r / (r + lambda_j) on the aggregated columns.
inline AgeCentral age_central_estimate(const AgeAggregate& agg, const RMat& r_hbar_ad, MulCounter* counter = nullptr) {
  require(r_hbar_ad.rows() == agg.y_bar.rows() && r_hbar_ad.cols() == agg.y_bar.cols(),
          "age_central_estimate: profile shape mismatch");
  require_profile(r_hbar_ad, "age_central_estimate");
  AgeCentral c;
  c.g_tilde = CMat::Zero(agg.y_bar.rows(), agg.y_bar.cols());
  c.columns = agg.columns;
  c.mse.assign(static_cast<std::size_t>(agg.y_bar.cols()), 0.0);
  for (Index j : agg.columns) {
    const double lam = agg.lambda[static_cast<std::size_t>(j)];
    require(lam > 0.0, "age_central_estimate: noise level must be positive on selected columns");
    double mse = 0.0;
    for (Index i = 0; i < agg.y_bar.rows(); ++i) {
      const double r = r_hbar_ad(i, j);
      c.g_tilde(i, j) = agg.y_bar(i, j) * (r / (r + lam));
      mse += mmse_term(r, lam);
    }
    c.mse[static_cast<std::size_t>(j)] = mse;
  }
  tally(counter, Site::central, 2ull * static_cast<std::uint64_t>(agg.y_bar.rows()) * agg.columns.size());
  return c;
}

/// F_R on the selected columns, split into per-node downlink payloads.
inline std::vector<ColumnPayload> age_downlink(const AgeCentral& c, const DomainTransforms& t,
                                               MulCounter* counter = nullptr) {
  const auto k = static_cast<Index>(c.columns.size());
  CMat sub(c.g_tilde.rows(), k);
  for (Index q = 0; q < k; ++q) sub.col(q) = c.g_tilde.col(c.columns[static_cast<std::size_t>(q)]);
  const CMat g = k > 0 ? cmul(t.rx.matrix, sub, counter, Site::central) : CMat(t.n_rx(), 0);
  std::vector<ColumnPayload> out;
  const Index n_r = t.n_local();
  for (Index m = 0; m < t.clusters; ++m) {
    ColumnPayload p;
    p.rows = n_r;
    p.values = g.middleRows(m * n_r, n_r);
    for (Index j : c.columns) p.columns.push_back(static_cast<std::uint32_t>(j));
    out.push_back(std::move(p));
  }
  return out;
}

/// Column-wise merge of the downlinked central estimate and the local one.
inline CMat age_combine(const ColumnPayload& central, const LocalEstimate& local, double alpha) {
  check_alpha(alpha);
  const Index n_c = local.g.cols();
  const CMat g_c = central.expand(n_c);
  std::vector<Index> central_cols;
  for (auto j : central.columns) central_cols.push_back(static_cast<Index>(j));
  const auto in_c = indicator(central_cols, n_c);
  const auto in_l = indicator(local.columns, n_c);
  CMat a = CMat::Zero(local.g.rows(), n_c);
  for (Index j = 0; j < n_c; ++j) {
    const bool c = in_c[static_cast<std::size_t>(j)];
    const bool l = in_l[static_cast<std::size_t>(j)];
    if (c && l)
      a.col(j) = alpha * g_c.col(j) + (1.0 - alpha) * local.g.col(j);
    else if (c)
      a.col(j) = g_c.col(j);
    else if (l)
      a.col(j) = local.g.col(j);
  }
  return a;
}

struct AgeNodeOutput {
  CMat a;      // combined antenna-delay estimate
  CMat h_hat;  // a * F_C
};

inline std::vector<AgeNodeOutput> age_downlink_and_combine(const AgeCentral& c,
                                                           const std::vector<LocalEstimate>& locals, double alpha,
                                                           const DomainTransforms& t, MulCounter* counter = nullptr) {
  check_alpha(alpha);
  require(static_cast<Index>(locals.size()) == t.clusters, "age_downlink_and_combine: one local estimate per node");
  const auto down = age_downlink(c, t, counter);
  std::vector<AgeNodeOutput> out;
  for (std::size_t m = 0; m < locals.size(); ++m) {
    AgeNodeOutput o;
    o.a = age_combine(down[m], locals[m], alpha);
    o.h_hat = cmul(o.a, t.freq.matrix, counter, Site::local);
    out.push_back(std::move(o));
  }
  return out;
}

struct AgeResult {
  std::vector<EstimateReport> nodes;  // N_r x N_C each
  CommLedger ledger;
  CostResult cost;
  std::vector<Index> ul_cols, dl_cols;
  std::vector<std::vector<Index>> local_columns;  // I_m^(l)
  std::vector<Index> central_columns;             // I
  std::vector<double> lambda;
  std::vector<double> central_mse;  // per column

  EstimateReport combined() const { return combine_reports(nodes, "age"); }
};

/// Steps after the local hard windows are known.
inline AgeResult age_run_windows(const std::vector<AgeLocalWindow>& windows, const PowerProfile& profile,
                                 const RMat& r_hbar_ad, double sigma2, double alpha, TopologyKind topology,
                                 const DomainTransforms& t, MulCounter* counter = nullptr) {
  check_alpha(alpha);
  require(static_cast<Index>(windows.size()) == t.clusters && profile.r_h_ad_local.size() == windows.size(),
          "age_run: cluster count mismatch");
  const Topology topo(topology, t.clusters);
  AgeResult res;

  std::vector<LocalEstimate> locals;
  std::vector<ColumnPayload> up;
  for (std::size_t m = 0; m < windows.size(); ++m) {
    locals.push_back(age_local_estimate(windows[m].residual, windows[m].local_columns, profile.r_h_ad_local[m], sigma2,
                                        t, counter));
    up.push_back(windows[m].uplink);
    res.local_columns.push_back(windows[m].local_columns);
    res.ul_cols.push_back(static_cast<Index>(windows[m].uplink.columns.size()));
    route(windows[m].uplink.real_value_count(), static_cast<Index>(m) + 1, topo.hub(), topo, res.ledger, Phase::uplink);
  }

  const AgeAggregate agg = age_aggregate(up, sigma2, t, counter);
  const AgeCentral central = age_central_estimate(agg, r_hbar_ad, counter);
  res.central_columns = agg.columns;
  res.lambda = agg.lambda;
  res.central_mse = central.mse;

  const auto down = age_downlink(central, t, counter);
  for (std::size_t m = 0; m < windows.size(); ++m) {
    res.dl_cols.push_back(static_cast<Index>(down[m].columns.size()));
    route(down[m].real_value_count(), topo.hub(), static_cast<Index>(m) + 1, topo, res.ledger, Phase::downlink);
    EstimateReport rep;
    rep.h_hat_af = cmul(age_combine(down[m], locals[m], alpha), t.freq.matrix, counter, Site::local);
    rep.method = "age";
    rep.sigma2 = sigma2;
    res.nodes.push_back(std::move(rep));
  }
  res.cost = age_cost(res.ul_cols, res.dl_cols, t.n_local(), t.clusters, topology, t.n_freq());
  return res;
}

/// Full AGE pipeline on the per-node received signals.
inline AgeResult age_run(const std::vector<CMat>& views, const PowerProfile& profile, const RMat& r_hbar_ad,
                         double sigma2, double eta, double alpha, TopologyKind topology, const DomainTransforms& t,
                         MulCounter* counter = nullptr) {
  require(static_cast<Index>(views.size()) == t.clusters, "age_run: one view per node required");
  std::vector<AgeLocalWindow> windows;
  for (const auto& y : views) windows.push_back(age_local_window(y, sigma2, eta, t, counter));
  return age_run_windows(windows, profile, r_hbar_ad, sigma2, alpha, topology, t, counter);
}

// ===========================================================================
// EAG
// ===========================================================================

struct EagLocalWindow {
  HardWindowMask mask;
  BlockPayload uplink;
  CMat residual;       // local estimate minus its uploaded block
  BMat local_support;  // J_m^(l): nonzero entries of the residual
};

inline EagLocalWindow eag_window_from_selection(const CMat& local_estimate, std::vector<Index> rows,
                                                std::vector<Index> cols, double eta = 0.0) {
  std::sort(rows.begin(), rows.end());
  std::sort(cols.begin(), cols.end());
  EagLocalWindow w;
  w.mask.kind = MaskKind::row_and_column_sparse;
  w.mask.eta = eta;
  w.mask.n_rows = local_estimate.rows();
  w.mask.n_cols = local_estimate.cols();
  if (!rows.empty() && !cols.empty()) {
    w.mask.rows = std::move(rows);
    w.mask.cols = std::move(cols);
  }
  w.uplink = make_block_payload(local_estimate, w.mask.rows, w.mask.cols);
  w.residual = local_estimate;
  for (Index r : w.mask.rows)
    for (Index c : w.mask.cols) w.residual(r, c) = 0.0;
  w.local_support = w.residual.array() != cd(0.0, 0.0);
  return w;
}

/// Entry (i,j) is uploaded iff column j has squared norm >= eta*N_r*sigma2 and
/// row i has squared norm >= eta*N_C*sigma2.
inline EagLocalWindow eag_local_window(const CMat& local_estimate, double sigma2, double eta) {
  require(eta >= 0.0, "eag_local_window: eta must be non-negative");
  require(sigma2 >= 0.0, "eag_local_window: sigma2 must be non-negative");
  const double col_thr = eta * static_cast<double>(local_estimate.rows()) * sigma2;
  const double row_thr = eta * static_cast<double>(local_estimate.cols()) * sigma2;
  return eag_window_from_selection(local_estimate, strong_rows(local_estimate, row_thr),
                                   strong_columns(local_estimate, col_thr), eta);
}

struct EagCentral {
  CMat q;                      // aggregate, N_R x N_C
  CMat b_tilde;                // refined estimate, zero outside the uploaded columns
  std::vector<Index> columns;  // union of uploaded columns
  RMat mse;                    // per-entry closed-form central MSE (0 outside `columns`)
  std::size_t clamped = 0;     // ratio window entries clamped to 1
  std::size_t negative = 0;    // MSE entries below -1e-9 before clamping
};

/// Sum of lifted uploads, then the ratio window R_hbar / R_qhat where
/// R_qhat > 0 (zero elsewhere).
inline EagCentral eag_aggregate_and_refine(const std::vector<BlockPayload>& uploads, const RMat& r_hbar_ad,
                                           const RMat& r_qhat, const DomainTransforms& t,
                                           MulCounter* counter = nullptr) {
  require(static_cast<Index>(uploads.size()) == t.clusters, "eag_aggregate: one upload per node required");
  require(r_hbar_ad.rows() == t.n_rx() && r_hbar_ad.cols() == t.n_freq() && r_qhat.rows() == t.n_rx() &&
              r_qhat.cols() == t.n_freq(),
          "eag_aggregate: profile shape mismatch");
  require_profile(r_hbar_ad, "eag_aggregate");
  require_profile(r_qhat, "eag_aggregate");
  const Index n_R = t.n_rx(), n_c = t.n_freq(), n_r = t.n_local();
  EagCentral c;
  c.q = CMat::Zero(n_R, n_c);
  std::vector<bool> seen(static_cast<std::size_t>(n_c), false);
  for (std::size_t m = 0; m < uploads.size(); ++m) {
    const auto& u = uploads[m];
    if (u.empty()) continue;
    const auto nr_sel = static_cast<Index>(u.rows.size());
    CMat f_cols(n_r, nr_sel);
    for (Index a = 0; a < nr_sel; ++a) {
      require(static_cast<Index>(u.rows[static_cast<std::size_t>(a)]) < n_r, "eag_aggregate: row index out of range");
      f_cols.col(a) = t.local.matrix.col(u.rows[static_cast<std::size_t>(a)]);
    }
    const CMat antenna = cmul(f_cols, u.values, counter, Site::central);
    const CMat lifted = cmul(t.blocks_adjoint[m], antenna, counter, Site::central);
    for (std::size_t b = 0; b < u.columns.size(); ++b) {
      const auto j = static_cast<Index>(u.columns[b]);
      require(j < n_c, "eag_aggregate: column index out of range");
      c.q.col(j) += lifted.col(static_cast<Index>(b));
      seen[static_cast<std::size_t>(j)] = true;
    }
  }
  for (Index j = 0; j < n_c; ++j)
    if (seen[static_cast<std::size_t>(j)]) c.columns.push_back(j);

  c.b_tilde = CMat::Zero(n_R, n_c);
  c.mse = RMat::Zero(n_R, n_c);
  for (Index j : c.columns) {
    for (Index i = 0; i < n_R; ++i) {
      const double rh = r_hbar_ad(i, j);
      const double rq = r_qhat(i, j);
      if (rq <= 0.0) {
        c.mse(i, j) = rh;
        continue;
      }
      double s = rh / rq;
      if (s > 1.0) {
        s = 1.0;
        ++c.clamped;
      }
      c.b_tilde(i, j) = s * c.q(i, j);
      double e = rh * (rq - rh) / rq;
      if (e < -1e-9) ++c.negative;
      c.mse(i, j) = std::max(e, 0.0);
    }
  }
  tally(counter, Site::central, 2ull * static_cast<std::uint64_t>(n_R) * c.columns.size());
  return c;
}

struct EagResult {
  std::vector<EstimateReport> nodes;
  CommLedger ledger;
  CostResult cost;
  std::vector<Index> ul_rows, ul_cols, dl_cols;
  std::vector<Index> central_columns;  // union of uploaded columns (downlinked)
  std::vector<BMat> central_support;   // J_m
  std::vector<BMat> local_support;     // J_m^(l)
  RMat central_mse;                    // per entry, global angle-delay domain
  std::size_t clamped = 0;
  std::size_t negative = 0;

  EstimateReport combined() const { return combine_reports(nodes, "eag"); }
};

/// J_m: the entries node m uploaded. The refinement target is the windowed
/// channel, which is zero on every other entry of the node.
inline BMat eag_central_support(const EagLocalWindow& w) { return w.mask.support(); }

/// Entrywise merge in the local angle-delay domain.
inline CMat eag_combine(const CMat& central_local, const BMat& central_support, const CMat& residual,
                        const BMat& local_support, double alpha) {
  check_alpha(alpha);
  require(central_support.rows() == residual.rows() && central_support.cols() == residual.cols(),
          "eag_combine: support shape mismatch");
  CMat h = CMat::Zero(residual.rows(), residual.cols());
  for (Index i = 0; i < residual.rows(); ++i)
    for (Index j = 0; j < residual.cols(); ++j) {
      const bool c = central_support(i, j);
      const bool l = local_support(i, j);
      if (c && l)
        h(i, j) = alpha * central_local(i, j) + (1.0 - alpha) * residual(i, j);
      else if (c)
        h(i, j) = central_local(i, j);
      else if (l)
        h(i, j) = residual(i, j);
    }
  return h;
}

inline EagResult eag_run_windows(const std::vector<EagLocalWindow>& windows, const RMat& r_hbar_ad, const RMat& r_qhat,
                                 double sigma2, double alpha, TopologyKind topology, const DomainTransforms& t,
                                 MulCounter* counter = nullptr) {
  check_alpha(alpha);
  require(static_cast<Index>(windows.size()) == t.clusters, "eag_run: cluster count mismatch");
  const Topology topo(topology, t.clusters);
  const Index n_r = t.n_local();
  EagResult res;

  std::vector<BlockPayload> up;
  for (std::size_t m = 0; m < windows.size(); ++m) {
    const auto& u = windows[m].uplink;
    up.push_back(u);
    res.ul_rows.push_back(static_cast<Index>(u.empty() ? 0 : u.rows.size()));
    res.ul_cols.push_back(static_cast<Index>(u.empty() ? 0 : u.columns.size()));
    res.local_support.push_back(windows[m].local_support);
    res.central_support.push_back(eag_central_support(windows[m]));
    route(u.real_value_count(), static_cast<Index>(m) + 1, topo.hub(), topo, res.ledger, Phase::uplink);
  }

  const EagCentral central = eag_aggregate_and_refine(up, r_hbar_ad, r_qhat, t, counter);
  res.central_columns = central.columns;
  res.central_mse = central.mse;
  res.clamped = central.clamped;
  res.negative = central.negative;

  // downlink: antenna-delay columns of F_R * B~
  AgeCentral as_columns;
  as_columns.g_tilde = central.b_tilde;
  as_columns.columns = central.columns;
  const auto down = age_downlink(as_columns, t, counter);

  const auto k = static_cast<Index>(central.columns.size());
  for (std::size_t m = 0; m < windows.size(); ++m) {
    res.dl_cols.push_back(static_cast<Index>(down[m].columns.size()));
    route(down[m].real_value_count(), topo.hub(), static_cast<Index>(m) + 1, topo, res.ledger, Phase::downlink);
    CMat central_local = CMat::Zero(n_r, t.n_freq());
    if (k > 0) {
      const CMat back = cmul(t.local.adjoint, down[m].values, counter, Site::local);
      for (Index q = 0; q < k; ++q) central_local.col(central.columns[static_cast<std::size_t>(q)]) = back.col(q);
    }
    const CMat h_ad = eag_combine(central_local, res.central_support[m], windows[m].residual, windows[m].local_support, alpha);
    EstimateReport rep;
    rep.h_hat_af = from_angle_delay(h_ad, t.local, t.freq, counter, Site::local);
    rep.method = "eag";
    rep.sigma2 = sigma2;
    res.nodes.push_back(std::move(rep));
  }
  res.cost = eag_cost(res.ul_rows, res.ul_cols, res.dl_cols, n_r, t.clusters, topology, t.n_freq());
  return res;
}

inline EagResult eag_run(const std::vector<CMat>& views, const PowerProfile& profile, const RMat& r_hbar_ad,
                         const RMat& r_qhat, double sigma2, double eta, double alpha, TopologyKind topology,
                         const DomainTransforms& t, MulCounter* counter = nullptr) {
  require(static_cast<Index>(views.size()) == t.clusters && profile.r_h_ad_local.size() == views.size(),
          "eag_run: one view per node required");
  std::vector<EagLocalWindow> windows;
  for (std::size_t m = 0; m < views.size(); ++m) {
    const CMat local = local_dmmse_ad(views[m], profile.r_h_ad_local[m], sigma2, t, counter);
    windows.push_back(eag_local_window(local, sigma2, eta));
  }
  return eag_run_windows(windows, r_hbar_ad, r_qhat, sigma2, alpha, topology, t, counter);
}

// ===========================================================================
// Mask-dependent profiles
// ===========================================================================

/// Second moments of the windowed channel (and, for EAG, of the aggregated
/// local estimates), estimated over training draws with the run's eta and
/// noise level.
struct WindowedProfile {
  RMat r_hbar_ad;
  RMat r_qhat;  // EAG only
  std::size_t sample_count = 0;
};

/// Unit-variance noise matrices for the training draws, one per realization.
inline std::vector<CMat> training_noise(std::uint64_t seed, std::size_t count, Index rows, Index cols) {
  std::vector<CMat> out;
  for (std::size_t l = 0; l < count; ++l) {
    Rng rng(seed, Stream::training_noise, l);
    out.push_back(add_noise(CMat::Zero(rows, cols), 1.0, rng));
  }
  return out;
}

inline WindowedProfile estimate_age_profile(const std::vector<ChannelRealization>& training,
                                            const std::vector<CMat>& unit_noise, double sigma2, double eta,
                                            const DomainTransforms& t) {
  require(!training.empty() && training.size() == unit_noise.size(),
          "estimate_age_profile: need one noise draw per training realization");
  const Index n_r = t.n_local();
  const double sd = std::sqrt(sigma2);
  WindowedProfile p;
  p.r_hbar_ad = RMat::Zero(t.n_rx(), t.n_freq());
  for (std::size_t l = 0; l < training.size(); ++l) {
    const CMat h_ad_ant = training[l].h_af * t.freq.adjoint;
    const CMat y_ad_ant = (training[l].h_af + sd * unit_noise[l]) * t.freq.adjoint;
    CMat hbar = CMat::Zero(t.n_rx(), t.n_freq());
    for (Index m = 0; m < t.clusters; ++m) {
      const auto cols = strong_columns(y_ad_ant.middleRows(m * n_r, n_r), eta * static_cast<double>(n_r) * sigma2);
      if (cols.empty()) continue;
      CMat sub(n_r, static_cast<Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = h_ad_ant.block(m * n_r, cols[k], n_r, 1);
      const CMat lifted = t.blocks_adjoint[static_cast<std::size_t>(m)] * sub;
      for (std::size_t k = 0; k < cols.size(); ++k) hbar.col(cols[k]) += lifted.col(static_cast<Index>(k));
    }
    p.r_hbar_ad += power(hbar);
  }
  p.r_hbar_ad /= static_cast<double>(training.size());
  p.sample_count = training.size();
  return p;
}

inline WindowedProfile estimate_eag_profile(const std::vector<ChannelRealization>& training,
                                            const std::vector<CMat>& unit_noise, const PowerProfile& profile,
                                            double sigma2, double eta, const DomainTransforms& t) {
  require(!training.empty() && training.size() == unit_noise.size(),
          "estimate_eag_profile: need one noise draw per training realization");
  require(static_cast<Index>(profile.r_h_ad_local.size()) == t.clusters, "estimate_eag_profile: cluster count mismatch");
  const Index n_r = t.n_local();
  const double sd = std::sqrt(sigma2);
  const auto lift = lift_maps(t);
  std::vector<RMat> windows;
  for (const auto& r : profile.r_h_ad_local) windows.push_back(soft_window(r, sigma2).s);
  WindowedProfile p;
  p.r_hbar_ad = RMat::Zero(t.n_rx(), t.n_freq());
  p.r_qhat = RMat::Zero(t.n_rx(), t.n_freq());
  for (std::size_t l = 0; l < training.size(); ++l) {
    const CMat y = training[l].h_af + sd * unit_noise[l];
    CMat hbar = CMat::Zero(t.n_rx(), t.n_freq());
    CMat qhat = CMat::Zero(t.n_rx(), t.n_freq());
    for (Index m = 0; m < t.clusters; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      const CMat h_loc = t.local.adjoint * training[l].h_af.middleRows(m * n_r, n_r) * t.freq.adjoint;
      const CMat y_loc = t.local.adjoint * y.middleRows(m * n_r, n_r) * t.freq.adjoint;
      const CMat est = y_loc.array() * windows[mi].array().cast<cd>();
      const auto w = eag_local_window(est, sigma2, eta);
      if (w.mask.empty()) continue;
      const RMat d = w.mask.d();
      const CMat hd = h_loc.array() * d.array().cast<cd>();
      const CMat qd = est.array() * d.array().cast<cd>();
      hbar += lift[mi] * hd;
      qhat += lift[mi] * qd;
    }
    p.r_hbar_ad += power(hbar);
    p.r_qhat += power(qhat);
  }
  p.r_hbar_ad /= static_cast<double>(training.size());
  p.r_qhat /= static_cast<double>(training.size());
  p.sample_count = training.size();
  return p;
}

// ===========================================================================
// Closed-form upper bounds
// ===========================================================================

/// Per-node index sets of an AGE run.
struct AgeIndexSets {
  std::vector<Index> central_columns;             // I
  std::vector<std::vector<Index>> local_columns;  // I_m^(l)
  std::vector<double> lambda;                     // per column
};

inline AgeIndexSets index_sets(const AgeResult& r) { return {r.central_columns, r.local_columns, r.lambda}; }

/// Central per-column MSE is split evenly over the M nodes (a unitary F_R
/// spreads independent angle-domain errors uniformly over antennas).
inline double prop1_bound(const AgeIndexSets& sets, const RMat& r_hbar_ad, const std::vector<RMat>& local_profiles,
                          double sigma2, double alpha) {
  check_alpha(alpha);
  const auto m_count = static_cast<Index>(local_profiles.size());
  require(m_count >= 1 && static_cast<Index>(sets.local_columns.size()) == m_count, "prop1_bound: node count mismatch");
  const Index n_c = r_hbar_ad.cols();
  require(static_cast<Index>(sets.lambda.size()) == n_c, "prop1_bound: lambda length mismatch");
  const auto in_c = indicator(sets.central_columns, n_c);
  std::vector<double> central(static_cast<std::size_t>(n_c), 0.0);
  for (Index j : sets.central_columns) {
    const double lam = sets.lambda[static_cast<std::size_t>(j)];
    require(lam > 0.0, "prop1_bound: noise level must be positive on central columns");
    for (Index i = 0; i < r_hbar_ad.rows(); ++i) central[static_cast<std::size_t>(j)] += mmse_term(r_hbar_ad(i, j), lam);
  }
  double bound = 0.0;
  for (Index m = 0; m < m_count; ++m) {
    const auto& prof = local_profiles[static_cast<std::size_t>(m)];
    require(prof.cols() == n_c, "prop1_bound: profile shape mismatch");
    const auto in_l = indicator(sets.local_columns[static_cast<std::size_t>(m)], n_c);
    for (Index j = 0; j < n_c; ++j) {
      const bool c = in_c[static_cast<std::size_t>(j)];
      const bool l = in_l[static_cast<std::size_t>(j)];
      const double share = central[static_cast<std::size_t>(j)] / static_cast<double>(m_count);
      double fd = 0.0;
      if (l)
        for (Index i = 0; i < prof.rows(); ++i) fd += mmse_term(prof(i, j), sigma2);
      if (c && l)
        bound += alpha * share + (1.0 - alpha) * fd;
      else if (c)
        bound += share;
      else if (l)
        bound += fd;
      else
        bound += prof.col(j).sum();
    }
  }
  return bound;
}

struct EagIndexSets {
  std::vector<BMat> central_support;  // J_m
  std::vector<BMat> local_support;    // J_m^(l)
};

inline EagIndexSets index_sets(const EagResult& r) { return {r.central_support, r.local_support}; }

/// Entrywise analogue: node m's share of the central error at local entry
/// (i,j) is sum_k |[F_{N_r}^H F_m]_{ik}|^2 * mse_{kj}.
inline double prop2_bound(const EagIndexSets& sets, const RMat& central_mse, const std::vector<RMat>& local_profiles,
                          double sigma2, double alpha, const DomainTransforms& t) {
  check_alpha(alpha);
  const auto m_count = static_cast<Index>(local_profiles.size());
  require(m_count == t.clusters && static_cast<Index>(sets.local_support.size()) == m_count &&
              static_cast<Index>(sets.central_support.size()) == m_count,
          "prop2_bound: node count mismatch");
  require(central_mse.rows() == t.n_rx() && central_mse.cols() == t.n_freq(), "prop2_bound: shape mismatch");
  const Index n_c = t.n_freq();
  double bound = 0.0;
  for (Index m = 0; m < m_count; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    const auto& cs = sets.central_support[mi];
    const RMat share = local_mixing_weights(t, m) * central_mse;
    const auto& prof = local_profiles[mi];
    const auto& sup = sets.local_support[mi];
    require(prof.rows() == t.n_local() && prof.cols() == n_c && sup.rows() == prof.rows() && sup.cols() == n_c &&
                cs.rows() == prof.rows() && cs.cols() == n_c,
            "prop2_bound: profile shape mismatch");
    for (Index i = 0; i < prof.rows(); ++i)
      for (Index j = 0; j < n_c; ++j) {
        const bool c = cs(i, j);
        const bool l = sup(i, j);
        const double fd = mmse_term(prof(i, j), sigma2);
        if (c && l)
          bound += alpha * share(i, j) + (1.0 - alpha) * fd;
        else if (c)
          bound += share(i, j);
        else if (l)
          bound += fd;
        else
          bound += prof(i, j);
      }
  }
  return bound;
}

}  // namespace dce
