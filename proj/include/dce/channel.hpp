// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic channels that are sparse in angle and sparse-and-dispersive in
// delay, their cluster partitions, and power-profile estimation.
//
// A scenario fixes the support: a handful of delay taps, each carrying a few
// contiguous angular bands, plus a small amount of power leaked into the
// 4-neighbourhood of every active angle-delay bin. Realizations redraw
// independent complex Gaussian gains on that support, so the per-entry
// variance map of the angle-delay channel is known exactly.

#include "dce/numerics.hpp"
#include "dce/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace dce {

struct ChannelParams {
  Index n_r_total = 64;      // N_R
  Index n_c = 128;           // N_C
  Index m_clusters = 4;      // M
  Index n_paths = 4;         // active delay taps
  Index angle_clusters = 2;  // angular bands per tap
  Index angle_spread = 1;    // half-width of each band, in angle bins
  double decay = 0.5;        // tap t carries decay^t of the power
  double leakage = 0.1;      // fraction of each active bin's power smeared to its neighbours
  std::uint64_t seed = 1;

  Index n_r_local() const { return n_r_total / m_clusters; }

  void validate() const {
    require(n_r_total >= 1 && n_c >= 1, "channel: n_r_total and n_c must be positive");
    require(m_clusters >= 1 && n_r_total % m_clusters == 0, "channel: m_clusters must divide n_r_total");
    require(n_paths >= 1 && n_paths <= n_c, "channel: n_paths must be in [1, n_c]");
    require(angle_clusters >= 1, "channel: angle_clusters must be positive");
    require(angle_spread >= 0 && 2 * angle_spread + 1 <= n_r_total,
            "channel: angle band (2*angle_spread+1) must fit in n_r_total");
    require(decay > 0.0 && decay <= 1.0, "channel: decay must be in (0, 1]");
    require(leakage >= 0.0 && leakage < 1.0, "channel: leakage must be in [0, 1)");
  }
};

struct Tap {
  Index delay = 0;
  double power = 0.0;  // relative, before normalization
  std::vector<Index> angle_centers;
};

struct ChannelScenario {
  ChannelParams params;
  std::vector<Tap> taps;
  RMat variance;  // exact E|H~_{ij}|^2, sums to N_R * N_C
};

struct ChannelRealization {
  CMat h_af;  // H, N_R x N_C
  CMat h_ad;  // H~ = F_R^H H F_C^H
};

struct ClusterView {
  Index cluster_index = 1;  // 1-based
  CMat h_af_m;              // rows of H owned by the cluster
  CMat h_ad_local_m;        // F_{N_r}^H H_m F_C^H
};

/// Elementwise second moments. r_h_ad_local holds one N_r x N_C matrix per
/// cluster. sample_count is 0 for analytically computed profiles.
struct PowerProfile {
  RMat r_h;
  RMat r_h_ad;
  std::vector<RMat> r_h_ad_local;
  std::size_t sample_count = 0;
};

inline ChannelScenario generate_scenario(const ChannelParams& params) {
  params.validate();
  const Index nr = params.n_r_total;
  const Index nc = params.n_c;
  Rng rng(params.seed, Stream::scenario);

  ChannelScenario sc;
  sc.params = params;

  // Delays: distinct, drawn from the low-delay quarter of the axis.
  const Index span = std::min(nc, std::max(params.n_paths, nc / 4));
  std::vector<Index> pool(static_cast<std::size_t>(span));
  for (Index i = 0; i < span; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < params.n_paths; ++i) {
    const auto k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(span - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i + k)]);
  }
  std::vector<Index> delays(pool.begin(), pool.begin() + params.n_paths);
  std::sort(delays.begin(), delays.end());

  double tap_power = 1.0;
  for (Index t = 0; t < params.n_paths; ++t) {
    Tap tap;
    tap.delay = delays[static_cast<std::size_t>(t)];
    tap.power = tap_power;
    for (Index c = 0; c < params.angle_clusters; ++c)
      tap.angle_centers.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(nr))));
    sc.taps.push_back(std::move(tap));
    tap_power *= params.decay;
  }

  RMat base = RMat::Zero(nr, nc);
  const Index width = 2 * params.angle_spread + 1;
  for (const auto& tap : sc.taps) {
    const double band_share = tap.power / static_cast<double>(params.angle_clusters);
    for (Index centre : tap.angle_centers) {
      for (Index d = -params.angle_spread; d <= params.angle_spread; ++d) {
        const Index row = ((centre + d) % nr + nr) % nr;
        base(row, tap.delay) += band_share / static_cast<double>(width);
      }
    }
  }

  RMat v = (1.0 - params.leakage) * base;
  const double q = params.leakage / 4.0;
  if (q > 0.0) {
    for (Index i = 0; i < nr; ++i) {
      for (Index j = 0; j < nc; ++j) {
        const double p = base(i, j);
        if (p == 0.0) continue;
        v((i + 1) % nr, j) += q * p;
        v((i + nr - 1) % nr, j) += q * p;
        v(i, (j + 1) % nc) += q * p;
        v(i, (j + nc - 1) % nc) += q * p;
      }
    }
  }
  v *= static_cast<double>(nr * nc) / v.sum();
  sc.variance = std::move(v);
  return sc;
}

/// One realization on the scenario's support. Only active bins consume
/// random draws, in row-major order.
inline ChannelRealization generate_realization(const ChannelScenario& sc, Rng& rng,
                                               const DomainTransforms& t) {
  require(t.n_rx() == sc.params.n_r_total && t.n_freq() == sc.params.n_c,
          "generate_realization: transforms do not match the scenario");
  ChannelRealization h;
  h.h_ad = CMat::Zero(sc.variance.rows(), sc.variance.cols());
  for (Index i = 0; i < h.h_ad.rows(); ++i)
    for (Index j = 0; j < h.h_ad.cols(); ++j)
      if (sc.variance(i, j) > 0.0) h.h_ad(i, j) = rng.complex_normal(sc.variance(i, j));
  // only the active delay columns contribute: F_R H~[:, J] F_C[J, :]
  std::vector<Index> active;
  for (Index j = 0; j < h.h_ad.cols(); ++j)
    if (sc.variance.col(j).maxCoeff() > 0.0) active.push_back(j);
  CMat sub(h.h_ad.rows(), static_cast<Index>(active.size()));
  CMat fc_rows(static_cast<Index>(active.size()), t.n_freq());
  for (std::size_t k = 0; k < active.size(); ++k) {
    sub.col(static_cast<Index>(k)) = h.h_ad.col(active[k]);
    fc_rows.row(static_cast<Index>(k)) = t.freq.matrix.row(active[k]);
  }
  h.h_af = (t.rx.matrix * sub) * fc_rows;
  return h;
}

inline ChannelRealization generate_realization(const ChannelParams& params, Rng& rng) {
  const auto sc = generate_scenario(params);
  const auto t = make_transforms(params.n_r_total, params.n_c, params.m_clusters);
  return generate_realization(sc, rng, t);
}

/// `count` realizations drawn from the training stream of the scenario seed.
inline std::vector<ChannelRealization> training_set(const ChannelScenario& sc, std::size_t count,
                                                    const DomainTransforms& t) {
  std::vector<ChannelRealization> out;
  out.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    Rng rng(sc.params.seed, Stream::training, l);
    out.push_back(generate_realization(sc, rng, t));
  }
  return out;
}

/// Row blocks of an N_R x N_C matrix, one per cluster.
inline std::vector<CMat> split_rows(const CMat& y, Index clusters) {
  require(clusters >= 1 && y.rows() % clusters == 0, "split_rows: cluster count must divide row count");
  const Index rows = y.rows() / clusters;
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(clusters));
  for (Index m = 0; m < clusters; ++m) out.emplace_back(y.middleRows(m * rows, rows));
  return out;
}

inline std::vector<ClusterView> split_clusters(const ChannelRealization& h, const DomainTransforms& t) {
  require(h.h_af.rows() == t.n_rx() && h.h_af.cols() == t.n_freq(), "split_clusters: shape mismatch");
  std::vector<ClusterView> views;
  auto blocks = split_rows(h.h_af, t.clusters);
  for (Index m = 0; m < t.clusters; ++m) {
    ClusterView v;
    v.cluster_index = m + 1;
    v.h_af_m = std::move(blocks[static_cast<std::size_t>(m)]);
    v.h_ad_local_m = to_angle_delay(v.h_af_m, t.local, t.freq);
    views.push_back(std::move(v));
  }
  return views;
}

inline std::vector<ClusterView> split_clusters(const ChannelRealization& h, Index clusters) {
  return split_clusters(h, make_transforms(h.h_af.rows(), h.h_af.cols(), clusters));
}

/// Y = H + W with i.i.d. CN(0, sigma2) noise.
inline CMat add_noise(const CMat& h, double sigma2, Rng& rng) {
  require(sigma2 >= 0.0, "add_noise: sigma2 must be non-negative");
  CMat y = h;
  if (sigma2 == 0.0) return y;
  for (Index i = 0; i < y.rows(); ++i)
    for (Index j = 0; j < y.cols(); ++j) y(i, j) += rng.complex_normal(sigma2);
  return y;
}

inline CMat add_noise(const ChannelRealization& h, double sigma2, Rng& rng) {
  return add_noise(h.h_af, sigma2, rng);
}

inline double snr_db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

inline PowerProfile estimate_power_profiles(const std::vector<ChannelRealization>& realizations,
                                            const DomainTransforms& t) {
  require(!realizations.empty(), "estimate_power_profiles: no realizations");
  const Index nr = t.n_rx(), nc = t.n_freq();
  PowerProfile p;
  p.r_h = RMat::Zero(nr, nc);
  p.r_h_ad = RMat::Zero(nr, nc);
  p.r_h_ad_local.assign(static_cast<std::size_t>(t.clusters), RMat::Zero(t.n_local(), nc));
  for (const auto& h : realizations) {
    require(h.h_af.rows() == nr && h.h_af.cols() == nc && h.h_ad.rows() == nr && h.h_ad.cols() == nc,
            "estimate_power_profiles: realization shape mismatch");
    p.r_h += power(h.h_af);
    p.r_h_ad += power(h.h_ad);
    const auto blocks = split_rows(h.h_af, t.clusters);
    for (std::size_t m = 0; m < blocks.size(); ++m)
      p.r_h_ad_local[m] += power(to_angle_delay(blocks[m], t.local, t.freq));
  }
  const double inv = 1.0 / static_cast<double>(realizations.size());
  p.r_h *= inv;
  p.r_h_ad *= inv;
  for (auto& r : p.r_h_ad_local) r *= inv;
  p.sample_count = realizations.size();
  return p;
}

inline PowerProfile estimate_power_profiles(const std::vector<ChannelRealization>& realizations,
                                            Index clusters) {
  require(!realizations.empty(), "estimate_power_profiles: no realizations");
  const auto& h = realizations.front().h_af;
  return estimate_power_profiles(realizations, make_transforms(h.rows(), h.cols(), clusters));
}

/// |F_{N_r}^H F_m|^2: maps a column of the global angle-delay variance map
/// to the corresponding column of cluster m's local angle-delay variance.
inline RMat local_mixing_weights(const DomainTransforms& t, Index m) {
  return cmul(t.local.adjoint, t.blocks[static_cast<std::size_t>(m)]).cwiseAbs2();
}

/// Profiles implied by the scenario's exact variance map (independent
/// angle-delay entries make R_H flat).
inline PowerProfile exact_power_profile(const ChannelScenario& sc, const DomainTransforms& t) {
  require(t.n_rx() == sc.variance.rows() && t.n_freq() == sc.variance.cols(),
          "exact_power_profile: transforms do not match the scenario");
  PowerProfile p;
  p.r_h_ad = sc.variance;
  p.r_h = RMat::Constant(sc.variance.rows(), sc.variance.cols(),
                         sc.variance.sum() / static_cast<double>(sc.variance.size()));
  for (Index m = 0; m < t.clusters; ++m) p.r_h_ad_local.push_back(local_mixing_weights(t, m) * sc.variance);
  p.sample_count = 0;
  return p;
}

}  // namespace dce
