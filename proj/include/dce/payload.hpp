// SPDX-License-Identifier: Apache-2.0
#pragma once

// Messages exchanged between nodes and their wire encoding.
//
// Column payload: per column, a u32 index followed by 2*N_r f64 values
// (re, im interleaved, top to bottom). Block payload: u32 row count, u32
// column count (framing, not counted as payload), the row indices, the column
// indices, then 2*|rows|*|cols| f64 values in row-major order. All integers
// and doubles are little-endian.

#include "dce/numerics.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

namespace dce {

/// Selected columns of an N_r x N_C matrix.
struct ColumnPayload {
  Index rows = 0;                     // N_r
  std::vector<std::uint32_t> columns;  // ascending, 0-based
  CMat values;                        // rows x columns.size()

  std::uint64_t real_value_count() const {
    return static_cast<std::uint64_t>(columns.size()) * (2ull * static_cast<std::uint64_t>(rows) + 1ull);
  }

  /// Scatter back into a zero N_r x n_freq matrix.
  CMat expand(Index n_freq) const {
    CMat out = CMat::Zero(rows, n_freq);
    for (std::size_t k = 0; k < columns.size(); ++k) {
      require(static_cast<Index>(columns[k]) < n_freq, "column payload: index out of range");
      out.col(columns[k]) = values.col(static_cast<Index>(k));
    }
    return out;
  }
};

inline ColumnPayload make_column_payload(const CMat& m, const std::vector<Index>& cols) {
  ColumnPayload p;
  p.rows = m.rows();
  p.values.resize(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    require(cols[k] >= 0 && cols[k] < m.cols(), "column payload: index out of range");
    p.columns.push_back(static_cast<std::uint32_t>(cols[k]));
    p.values.col(static_cast<Index>(k)) = m.col(cols[k]);
  }
  return p;
}

/// Rows x columns block of an N_r x N_C matrix. Either index list being
/// empty means nothing is sent.
struct BlockPayload {
  std::vector<std::uint32_t> rows;
  std::vector<std::uint32_t> columns;
  CMat values;  // rows.size() x columns.size()

  bool empty() const { return rows.empty() || columns.empty(); }

  std::uint64_t real_value_count() const {
    if (empty()) return 0;
    const auto r = static_cast<std::uint64_t>(rows.size());
    const auto c = static_cast<std::uint64_t>(columns.size());
    return 2ull * r * c + r + c;
  }

  CMat expand(Index n_rows, Index n_freq) const {
    CMat out = CMat::Zero(n_rows, n_freq);
    if (empty()) return out;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < columns.size(); ++b) {
        require(static_cast<Index>(rows[a]) < n_rows && static_cast<Index>(columns[b]) < n_freq,
                "block payload: index out of range");
        out(rows[a], columns[b]) = values(static_cast<Index>(a), static_cast<Index>(b));
      }
    return out;
  }
};

inline BlockPayload make_block_payload(const CMat& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  BlockPayload p;
  if (rows.empty() || cols.empty()) return p;
  for (Index r : rows) {
    require(r >= 0 && r < m.rows(), "block payload: row index out of range");
    p.rows.push_back(static_cast<std::uint32_t>(r));
  }
  for (Index c : cols) {
    require(c >= 0 && c < m.cols(), "block payload: column index out of range");
    p.columns.push_back(static_cast<std::uint32_t>(c));
  }
  p.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) p.values(static_cast<Index>(a), static_cast<Index>(b)) = m(rows[a], cols[b]);
  return p;
}

namespace wire {

using Bytes = std::vector<std::uint8_t>;

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(Bytes& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const Bytes& b) : b_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const { require(pos_ + n <= b_.size(), "wire: truncated message"); }

  const Bytes& b_;
  std::size_t pos_ = 0;
};

}  // namespace wire

inline wire::Bytes serialize(const ColumnPayload& p) {
  wire::Bytes out;
  for (std::size_t k = 0; k < p.columns.size(); ++k) {
    wire::put_u32(out, p.columns[k]);
    for (Index i = 0; i < p.rows; ++i) {
      wire::put_f64(out, p.values(i, static_cast<Index>(k)).real());
      wire::put_f64(out, p.values(i, static_cast<Index>(k)).imag());
    }
  }
  return out;
}

inline ColumnPayload deserialize_columns(const wire::Bytes& bytes, Index rows) {
  require(rows >= 1, "deserialize_columns: rows must be positive");
  const std::size_t per_col = 4 + 16 * static_cast<std::size_t>(rows);
  require(bytes.size() % per_col == 0, "deserialize_columns: length is not a whole number of columns");
  const auto n = static_cast<Index>(bytes.size() / per_col);
  ColumnPayload p;
  p.rows = rows;
  p.values.resize(rows, n);
  wire::Reader r(bytes);
  for (Index k = 0; k < n; ++k) {
    p.columns.push_back(r.u32());
    for (Index i = 0; i < rows; ++i) {
      const double re = r.f64();
      p.values(i, k) = cd(re, r.f64());
    }
  }
  return p;
}

inline wire::Bytes serialize(const BlockPayload& p) {
  wire::Bytes out;
  const bool e = p.empty();
  wire::put_u32(out, e ? 0u : static_cast<std::uint32_t>(p.rows.size()));
  wire::put_u32(out, e ? 0u : static_cast<std::uint32_t>(p.columns.size()));
  if (e) return out;
  for (auto r : p.rows) wire::put_u32(out, r);
  for (auto c : p.columns) wire::put_u32(out, c);
  for (Index a = 0; a < p.values.rows(); ++a)
    for (Index b = 0; b < p.values.cols(); ++b) {
      wire::put_f64(out, p.values(a, b).real());
      wire::put_f64(out, p.values(a, b).imag());
    }
  return out;
}

inline BlockPayload deserialize_block(const wire::Bytes& bytes) {
  wire::Reader r(bytes);
  BlockPayload p;
  const std::uint32_t nr = r.u32();
  const std::uint32_t nc = r.u32();
  for (std::uint32_t a = 0; a < nr; ++a) p.rows.push_back(r.u32());
  for (std::uint32_t b = 0; b < nc; ++b) p.columns.push_back(r.u32());
  p.values.resize(nr, nc);
  for (std::uint32_t a = 0; a < nr; ++a)
    for (std::uint32_t b = 0; b < nc; ++b) {
      const double re = r.f64();
      p.values(a, b) = cd(re, r.f64());
    }
  require(r.done(), "deserialize_block: trailing bytes");
  return p;
}

}  // namespace dce
