// SPDX-License-Identifier: Apache-2.0
#pragma once

// Centralized full-covariance MMSE, diagonal MMSE (per-entry soft windows) in
// the antenna-frequency and angle-delay domains, the fully decentralized
// per-cluster variant, and their closed-form MSEs.

#include "dce/channel.hpp"
#include "dce/numerics.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace dce {

/// Per-entry scalar MMSE error for prior power r and noise power sigma2.
inline double mmse_term(double r, double sigma2) { return r * sigma2 / (r + sigma2); }

struct SoftWindow {
  RMat s;
};

inline void require_profile(const RMat& profile, const char* who) {
  require(profile.allFinite() && (profile.size() == 0 || profile.minCoeff() >= 0.0),
          std::string(who) + ": profile entries must be finite and non-negative");
}

inline SoftWindow soft_window(const RMat& profile, double sigma2) {
  require(sigma2 > 0.0 && std::isfinite(sigma2), "soft_window: sigma2 must be positive");
  require_profile(profile, "soft_window");
  SoftWindow w;
  w.s = profile.array() / (profile.array() + sigma2);
  return w;
}

/// S (.) X with a real window, 2 real multiplications per entry.
inline CMat apply_window(const RMat& s, const CMat& x, MulCounter* counter = nullptr, Site site = Site::central) {
  require(s.rows() == x.rows() && s.cols() == x.cols(), "apply_window: shape mismatch");
  tally(counter, site, 2ull * static_cast<std::uint64_t>(x.size()));
  CMat out = x.array() * s.array().cast<cd>();
  return out;
}

struct EstimateReport {
  CMat h_hat_af;
  double nmse = std::numeric_limits<double>::quiet_NaN();
  std::string method;
  double sigma2 = 0.0;

  /// Sets nmse = ||H_hat - H||^2 / ||H||^2 against the true channel.
  EstimateReport& score(const CMat& truth) {
    require(truth.rows() == h_hat_af.rows() && truth.cols() == h_hat_af.cols(), "score: shape mismatch");
    const double denom = truth.squaredNorm();
    require(denom > 0.0, "score: true channel is zero");
    nmse = (h_hat_af - truth).squaredNorm() / denom;
    return *this;
  }
};

inline double squared_error(const CMat& estimate, const CMat& truth) {
  require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols(), "squared_error: shape mismatch");
  return (estimate - truth).squaredNorm();
}

// ---------------------------------------------------------------------------
// Full MMSE (verification oracle only)
// ---------------------------------------------------------------------------

inline constexpr Index kFullMmseMaxDim = 4096;

/// Factorization of R + sigma2*I, reusable across observations.
class FullMmse {
 public:
  FullMmse(const Eigen::MatrixXcd& r_cov, double sigma2) : r_(r_cov) {
    require(r_cov.rows() == r_cov.cols(), "full_mmse: covariance must be square");
    require(r_cov.rows() <= kFullMmseMaxDim, "full_mmse: dimension above the desk-scale limit");
    require(sigma2 >= 0.0, "full_mmse: sigma2 must be non-negative");
    const double asym = (r_cov - r_cov.adjoint()).cwiseAbs().maxCoeff();
    require(asym <= 1e-8, "full_mmse: covariance is not Hermitian");
    Eigen::MatrixXcd a = r_cov;
    a.diagonal().array() += sigma2;
    ldlt_.compute(a);
    const double scale = a.cwiseAbs().maxCoeff();
    const auto pivots = ldlt_.vectorD().cwiseAbs();
    require(ldlt_.info() == Eigen::Success && scale > 0.0 && pivots.minCoeff() > 1e-13 * pivots.maxCoeff() &&
                ldlt_.rcond() > 1e-13,
            "full_mmse: singular system");
  }

  CVec apply(const CVec& y) const {
    require(y.size() == r_.rows(), "full_mmse: observation length does not match covariance");
    return r_ * ldlt_.solve(y);
  }

 private:
  Eigen::MatrixXcd r_;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt_;
};

/// R (R + sigma2 I)^{-1} y.
inline CVec full_mmse(const CVec& y, const Eigen::MatrixXcd& r_cov, double sigma2) {
  return FullMmse(r_cov, sigma2).apply(y);
}

/// Covariance of vec(H) when the angle-delay entries are independent with
/// variance map v: T^H diag(vec v) T with T the angle-delay operator.
inline Eigen::MatrixXcd covariance_from_variance_map(const RMat& v, const UnitaryDft& fr, const UnitaryDft& fc) {
  require(v.rows() == fr.n && v.cols() == fc.n, "covariance_from_variance_map: shape mismatch");
  require(v.size() <= kFullMmseMaxDim, "covariance_from_variance_map: dimension above the desk-scale limit");
  const Eigen::MatrixXcd t = angle_delay_operator(fr, fc);
  Eigen::VectorXd d(v.size());
  Index k = 0;
  for (Index j = 0; j < v.cols(); ++j)
    for (Index i = 0; i < v.rows(); ++i) d(k++) = v(i, j);
  Eigen::MatrixXcd out = t.adjoint() * d.asDiagonal() * t;
  return 0.5 * (out + out.adjoint());
}

/// (1/L) sum vec(H_l) vec(H_l)^H.
inline Eigen::MatrixXcd sample_covariance(const std::vector<ChannelRealization>& realizations) {
  require(!realizations.empty(), "sample_covariance: no realizations");
  const Index n = realizations.front().h_af.size();
  require(n <= kFullMmseMaxDim, "sample_covariance: dimension above the desk-scale limit");
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& h : realizations) {
    require(h.h_af.size() == n, "sample_covariance: shape mismatch");
    const CVec x = vec(h.h_af);
    r.noalias() += x * x.adjoint();
  }
  r /= static_cast<double>(realizations.size());
  return 0.5 * (r + r.adjoint());
}

/// Largest entry of |T h_hat - h_tilde_hat| where h_tilde_hat is the full MMSE
/// run on the transformed observation and covariance.
inline double verify_fact1(const CMat& y, const Eigen::MatrixXcd& r_cov, double sigma2, const UnitaryDft& fr,
                           const UnitaryDft& fc) {
  require(fr.n == y.rows() && fc.n == y.cols(), "verify_fact1: dimension mismatch");
  require(r_cov.rows() == y.size() && r_cov.cols() == y.size(), "verify_fact1: covariance dimension mismatch");
  const Eigen::MatrixXcd t = angle_delay_operator(fr, fc);
  const CVec yv = vec(y);
  const CVec h_hat = full_mmse(yv, r_cov, sigma2);
  Eigen::MatrixXcd r_t = t * r_cov * t.adjoint();
  r_t = 0.5 * (r_t + r_t.adjoint());
  const CVec h_tilde_hat = full_mmse(t * yv, r_t, sigma2);
  return (t * h_hat - h_tilde_hat).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Diagonal MMSE
// ---------------------------------------------------------------------------

inline EstimateReport dmmse_af(const CMat& y, const PowerProfile& profile, double sigma2,
                               MulCounter* counter = nullptr) {
  require(y.rows() == profile.r_h.rows() && y.cols() == profile.r_h.cols(), "dmmse_af: shape mismatch");
  EstimateReport rep;
  rep.h_hat_af = apply_window(soft_window(profile.r_h, sigma2).s, y, counter);
  rep.method = "dmmse-af";
  rep.sigma2 = sigma2;
  return rep;
}

/// Centralized angle-delay DMMSE.
inline EstimateReport dmmse_ad(const CMat& y, const PowerProfile& profile, double sigma2, const DomainTransforms& t,
                               MulCounter* counter = nullptr) {
  require(y.rows() == profile.r_h_ad.rows() && y.cols() == profile.r_h_ad.cols(), "dmmse_ad: shape mismatch");
  require(y.rows() == t.n_rx() && y.cols() == t.n_freq(), "dmmse_ad: transforms do not match");
  const CMat y_ad = to_angle_delay(y, t.rx, t.freq, counter);
  const CMat h_ad = apply_window(soft_window(profile.r_h_ad, sigma2).s, y_ad, counter);
  EstimateReport rep;
  rep.h_hat_af = from_angle_delay(h_ad, t.rx, t.freq, counter);
  rep.method = "dmmse-ad";
  rep.sigma2 = sigma2;
  return rep;
}

/// Local angle-delay DMMSE at one cluster; returns the local angle-delay estimate.
inline CMat local_dmmse_ad(const CMat& y_m, const RMat& local_profile, double sigma2, const DomainTransforms& t,
                           MulCounter* counter = nullptr) {
  require(y_m.rows() == t.n_local() && y_m.cols() == t.n_freq(), "local_dmmse_ad: shape mismatch");
  require(local_profile.rows() == y_m.rows() && local_profile.cols() == y_m.cols(),
          "local_dmmse_ad: profile shape mismatch");
  const CMat y_ad = to_angle_delay(y_m, t.local, t.freq, counter, Site::local);
  return apply_window(soft_window(local_profile, sigma2).s, y_ad, counter, Site::local);
}

/// Fully decentralized DMMSE, one report per cluster (N_r x N_C estimates).
inline std::vector<EstimateReport> dmmse_fd(const std::vector<CMat>& views, const PowerProfile& profile,
                                            double sigma2, const DomainTransforms& t,
                                            MulCounter* counter = nullptr) {
  require(static_cast<Index>(views.size()) == t.clusters &&
              profile.r_h_ad_local.size() == views.size(),
          "dmmse_fd: cluster count mismatch");
  std::vector<EstimateReport> out;
  for (std::size_t m = 0; m < views.size(); ++m) {
    const CMat h_ad = local_dmmse_ad(views[m], profile.r_h_ad_local[m], sigma2, t, counter);
    EstimateReport rep;
    rep.h_hat_af = from_angle_delay(h_ad, t.local, t.freq, counter, Site::local);
    rep.method = "fd";
    rep.sigma2 = sigma2;
    out.push_back(std::move(rep));
  }
  return out;
}

/// Reassemble per-cluster reports into one N_R x N_C report.
inline EstimateReport combine_reports(const std::vector<EstimateReport>& parts, const std::string& method) {
  require(!parts.empty(), "combine_reports: no parts");
  std::vector<CMat> blocks;
  for (const auto& p : parts) blocks.push_back(p.h_hat_af);
  EstimateReport rep;
  rep.h_hat_af = stack_rows(blocks);
  rep.method = method;
  rep.sigma2 = parts.front().sigma2;
  return rep;
}

/// Elementwise r*sigma2/(r+sigma2).
inline RMat mse_terms(const RMat& profile, double sigma2) {
  require(sigma2 > 0.0, "closed_form_mse: sigma2 must be positive");
  require_profile(profile, "closed_form_mse");
  RMat out = profile.array() * sigma2 / (profile.array() + sigma2);
  return out;
}

inline double closed_form_mse(const RMat& profile, double sigma2) { return mse_terms(profile, sigma2).sum(); }

inline double closed_form_mse_fd(const PowerProfile& profile, double sigma2) {
  double total = 0.0;
  for (const auto& r : profile.r_h_ad_local) total += closed_form_mse(r, sigma2);
  return total;
}

struct EstimateRow {
  std::string method;
  double snr_db = 0.0;
  Index trial = 0;
  double nmse = 0.0;
};

inline void write_estimate_csv(std::ostream& os, const std::vector<EstimateRow>& rows) {
  os << "method,snr_db,trial,nmse\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) os << r.method << ',' << r.snr_db << ',' << r.trial << ',' << r.nmse << '\n';
  os.precision(old);
}

}  // namespace dce
