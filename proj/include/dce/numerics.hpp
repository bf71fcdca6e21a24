// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense complex matrices, unitary DFTs and the domain transforms between the
// antenna-frequency and angle-delay representations.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dce {

using cd = std::complex<double>;
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Thrown for any violated precondition (shape, range, parameter domain).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

// ---------------------------------------------------------------------------
// Real-multiplication accounting
// ---------------------------------------------------------------------------

/// Where a multiplication was performed: on the aggregation (destination)
/// node or on one of the local nodes.
enum class Site { central, local };

/// Tally of real-valued multiplications. A complex multiply-accumulate costs
/// 4, a complex-by-real product costs 2. Only matrix products and soft
/// windows are counted; thresholding and convex combinations are not.
struct MulCounter {
  std::uint64_t central = 0;
  std::uint64_t local = 0;

  void add(Site site, std::uint64_t n) { (site == Site::central ? central : local) += n; }
  std::uint64_t total() const { return central + local; }
};

inline void tally(MulCounter* counter, Site site, std::uint64_t n) {
  if (counter) counter->add(site, n);
}

/// Complex product a*b, counting 4 real multiplications per scalar MAC.
template <typename A, typename B>
CMat cmul(const A& a, const B& b, MulCounter* counter = nullptr, Site site = Site::central) {
  require(a.cols() == b.rows(), "matrix product: inner dimensions differ");
  tally(counter, site,
        4ull * static_cast<std::uint64_t>(a.rows()) * static_cast<std::uint64_t>(a.cols()) *
            static_cast<std::uint64_t>(b.cols()));
  CMat out = a * b;
  return out;
}

// ---------------------------------------------------------------------------
// Unitary DFT
// ---------------------------------------------------------------------------

/// Unitary DFT of size n: entry (k,l) = exp(-i 2 pi k l / n) / sqrt(n).
/// Both F and F^H are stored; all transforms are explicit dense products.
struct UnitaryDft {
  Index n = 0;
  CMat matrix;   // F
  CMat adjoint;  // F^H
};

inline UnitaryDft dft_matrix(Index n) {
  require(n >= 1, "dft_matrix: n must be positive");
  UnitaryDft f;
  f.n = n;
  f.matrix.resize(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      // reduce k*l mod n first so the phase stays accurate for large n
      const auto r = static_cast<double>((k * l) % n);
      const double phase = -2.0 * std::numbers::pi * r / static_cast<double>(n);
      f.matrix(k, l) = scale * cd(std::cos(phase), std::sin(phase));
    }
  }
  f.adjoint = f.matrix.adjoint();
  return f;
}

/// Rows (m-1)*n/M .. m*n/M - 1 of F, i.e. the m-th horizontal block F_m.
/// `m` is 1-based.
inline CMat dft_row_block(const UnitaryDft& f, Index m, Index clusters) {
  require(clusters >= 1 && f.n % clusters == 0, "dft_row_block: cluster count must divide n");
  require(m >= 1 && m <= clusters, "dft_row_block: cluster index out of range");
  const Index rows = f.n / clusters;
  return f.matrix.middleRows((m - 1) * rows, rows);
}

/// F_r^H * Y * F_c^H.
inline CMat to_angle_delay(const CMat& y, const UnitaryDft& fr, const UnitaryDft& fc,
                           MulCounter* counter = nullptr, Site site = Site::central) {
  require(fr.n == y.rows() && fc.n == y.cols(), "to_angle_delay: dimension mismatch");
  return cmul(cmul(fr.adjoint, y, counter, site), fc.adjoint, counter, site);
}

/// F_r * X * F_c, the inverse of to_angle_delay.
inline CMat from_angle_delay(const CMat& x, const UnitaryDft& fr, const UnitaryDft& fc,
                             MulCounter* counter = nullptr, Site site = Site::central) {
  require(fr.n == x.rows() && fc.n == x.cols(), "from_angle_delay: dimension mismatch");
  return cmul(cmul(fr.matrix, x, counter, site), fc.matrix, counter, site);
}

/// The DFTs a run needs: full array (N_R), frequency (N_C), and per-cluster
/// array (N_r = N_R / M), plus the row blocks F_m.
struct DomainTransforms {
  Index clusters = 1;
  UnitaryDft rx;     // F_{N_R}
  UnitaryDft freq;   // F_{N_C}
  UnitaryDft local;  // F_{N_r}
  std::vector<CMat> blocks;          // F_m, N_r x N_R
  std::vector<CMat> blocks_adjoint;  // F_m^H, N_R x N_r

  Index n_rx() const { return rx.n; }
  Index n_freq() const { return freq.n; }
  Index n_local() const { return local.n; }
};

inline DomainTransforms make_transforms(Index n_rx, Index n_freq, Index clusters) {
  require(n_rx >= 1 && n_freq >= 1, "make_transforms: sizes must be positive");
  require(clusters >= 1 && n_rx % clusters == 0, "make_transforms: cluster count must divide N_R");
  DomainTransforms t;
  t.clusters = clusters;
  t.rx = dft_matrix(n_rx);
  t.freq = n_freq == n_rx ? t.rx : dft_matrix(n_freq);
  t.local = dft_matrix(n_rx / clusters);
  for (Index m = 1; m <= clusters; ++m) {
    t.blocks.push_back(dft_row_block(t.rx, m, clusters));
    t.blocks_adjoint.push_back(t.blocks.back().adjoint());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Column-major vectorization, vec(Y).
inline CVec vec(const CMat& y) {
  CVec v(y.size());
  Index k = 0;
  for (Index j = 0; j < y.cols(); ++j)
    for (Index i = 0; i < y.rows(); ++i) v(k++) = y(i, j);
  return v;
}

inline CMat unvec(const CVec& v, Index rows, Index cols) {
  require(v.size() == rows * cols, "unvec: size mismatch");
  CMat y(rows, cols);
  Index k = 0;
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) y(i, j) = v(k++);
  return y;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// (F_c^* kron F_r^H): maps vec(Y) to vec(F_r^H Y F_c^H).
inline Eigen::MatrixXcd angle_delay_operator(const UnitaryDft& fr, const UnitaryDft& fc) {
  return kron(fc.matrix.conjugate(), fr.adjoint);
}

inline bool all_finite(const CMat& m) { return m.allFinite(); }

/// ||a - b||_F / ||b||_F (absolute error when b is zero).
template <typename A, typename B>
double relative_error(const A& a, const B& b) {
  const double denom = b.norm();
  const double num = (a - b).norm();
  return denom > 0.0 ? num / denom : num;
}

/// Elementwise |x|^2.
inline RMat power(const CMat& m) { return m.cwiseAbs2(); }

/// Stack row blocks vertically.
inline CMat stack_rows(const std::vector<CMat>& blocks) {
  require(!blocks.empty(), "stack_rows: no blocks");
  Index rows = 0;
  for (const auto& b : blocks) {
    require(b.cols() == blocks.front().cols(), "stack_rows: column count mismatch");
    rows += b.rows();
  }
  CMat out(rows, blocks.front().cols());
  Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

}  // namespace dce
