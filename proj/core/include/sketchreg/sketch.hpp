#pragma once

// Oblivious subspace embeddings as single-pass, mergeable builders.
//
//   RAD   Pi[r, i] = s_r(i) / sqrt(k), one 4-wise sign hash per sketch row
//   SRHT  Pi = R H_m D / sqrt(k), D_i 4-wise signs, R_r pairwise samples of [m]
//   CW    Pi = Phi D, row i lands in bucket h(i) with sign D_i
//   GRAM  Pi = X^T, the unstable normal-equation baseline
//
// The accumulator always equals Pi times the (implicitly zero-padded) data
// seen so far, so sketches of disjoint parts of a matrix add up to the
// sketch of the whole.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sketchreg/hashing.hpp"
#include "sketchreg/linalg.hpp"

namespace sketchreg {

enum class SketchMethod : std::uint8_t {
  Rad = 1,
  Srht = 2,
  Cw = 3,
  Gram = 4,
};

std::string_view method_name(SketchMethod method) noexcept;
/// Accepts "rad", "srht", "cw", "gram" (any case). Throws ContractError.
SketchMethod parse_method(std::string_view name);
std::optional<SketchMethod> method_from_tag(std::uint8_t tag) noexcept;

/// Smallest power of two >= n (n >= 1).
std::uint64_t next_power_of_two(std::uint64_t n);
/// Smallest power of two strictly greater than x (x >= 0).
std::uint64_t power_of_two_above(double x);

/// Target sketch dimension.
///
/// RAD, SRHT: ceil(D ln D / eps^2) with D = `dimension` as passed (callers
/// count variables, intercept and response).
/// CW: smallest power of two strictly greater than d^2 / (20 eps^2) with
/// d = `dimension` the number of variables; with `alpha_strict` the bound
/// d^2 / (eps^2 alpha) is used instead.
/// GRAM: dimension - 1, the row count of X^T [X, Y].
///
/// eps and alpha must lie in (0, 1/2]; otherwise ContractError.
std::uint64_t target_dimension(SketchMethod method, std::uint64_t dimension, double epsilon,
                               double alpha = 0.1, bool alpha_strict = false);

/// Turnstile update: X[row, col] += value. Column d_total - 1 is Y.
struct UpdateTriple {
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  double value = 0.0;
};

enum class SrhtMode {
  /// Exact per-row accumulation with the popcount entry formula.
  PerRow,
  /// Buffer aligned blocks of rows and apply one FWHT per block.
  Block,
};

struct BuilderOptions {
  SrhtMode srht_mode = SrhtMode::PerRow;
  std::size_t block_rows = 1024;  // power of two
};

class SketchBuilder {
 public:
  /// `k` is ignored for GRAM (which always has d_total - 1 rows). SRHT
  /// requires `n_hint`; the padding dimension m is the next power of two.
  /// For RAD and CW an `n_hint`, if given, bounds the accepted row indices.
  SketchBuilder(SketchMethod method, std::uint64_t d_total, std::uint64_t k,
                std::optional<std::uint64_t> n_hint, hashing::SketchSeed seed,
                BuilderOptions options = {});

  /// Rebuild a builder around a stored raw accumulator (sketch files).
  static SketchBuilder restore(SketchMethod method, std::uint64_t d_total, std::uint64_t k,
                               std::uint64_t m, std::uint64_t rows_seen,
                               hashing::SketchSeed seed, DenseMatrix accumulator);

  /// acc += (column i of Pi) (x) row.
  void push_row(std::uint64_t i, std::span<const double> row);
  /// Rows first_row, first_row + 1, ... of a block.
  void push_rows(std::uint64_t first_row, const DenseMatrix& rows);
  /// acc += u * (column i of Pi) (x) e_j. Not available for GRAM, whose
  /// embedding depends on the data.
  void push_update(const UpdateTriple& t);

  /// Applies any rows buffered by SRHT block mode.
  void flush();

  /// k x d_total sketch: 1/sqrt(k) times the accumulator for RAD and SRHT,
  /// the accumulator itself for CW and GRAM. Includes buffered rows.
  DenseMatrix finalize() const;

  /// Raw accumulator, excluding rows still buffered (see flush()).
  const DenseMatrix& accumulator() const noexcept { return acc_; }
  bool has_pending() const noexcept { return block_dirty_; }

  SketchMethod method() const noexcept { return method_; }
  std::uint64_t d_total() const noexcept { return d_total_; }
  std::uint64_t k() const noexcept { return k_; }
  /// SRHT padding dimension; 0 for the other methods.
  std::uint64_t m() const noexcept { return m_; }
  std::uint64_t rows_seen() const noexcept { return rows_seen_; }
  const hashing::SketchSeed& seed() const noexcept { return seed_; }
  /// Factor finalize() applies to the accumulator.
  double scale() const noexcept;

  /// Row count of the data the sketch summarizes, for update streams where
  /// push_row was never called.
  void set_rows_seen(std::uint64_t n) noexcept { rows_seen_ = n; }

  /// Same embedding: method, k, d_total, m and seed all agree.
  bool compatible_with(const SketchBuilder& other) const noexcept;

  /// Approximate heap footprint in bytes (accumulator plus cached hash state).
  std::size_t memory_bytes() const noexcept;

  friend SketchBuilder merge(const SketchBuilder& a, const SketchBuilder& b);

 private:
  SketchBuilder() = default;
  void init_caches();
  void check_row_index(std::uint64_t i) const;
  void add_scaled_column(std::uint64_t i, std::span<const double> row, double weight);
  void buffer_row(std::uint64_t i, std::span<const double> row);

  SketchMethod method_ = SketchMethod::Rad;
  std::uint64_t d_total_ = 0;
  std::uint64_t k_ = 0;
  std::uint64_t m_ = 0;
  std::optional<std::uint64_t> n_hint_;
  hashing::SketchSeed seed_;
  BuilderOptions options_;
  DenseMatrix acc_;
  std::uint64_t rows_seen_ = 0;

  std::vector<hashing::FourWiseCoefficients> row_hashes_;  // RAD, one per sketch row
  std::vector<std::uint64_t> sampled_rows_;                // SRHT, R_r in [m]

  DenseMatrix block_;  // SRHT block mode: D-signed rows of the current block
  std::uint64_t block_base_ = 0;
  bool block_dirty_ = false;
};

/// Elementwise sum of two accumulators drawn from the same embedding.
/// Throws MergeError on any configuration mismatch.
SketchBuilder merge(const SketchBuilder& a, const SketchBuilder& b);

/// X^T [X, Y] as a sum of rank-one terms x_i^T [x_i, y_i]; `data` holds
/// [X, Y] with the response in its last column.
DenseMatrix gram_sketch(const DenseMatrix& data);

/// Splits a finalized k x d_total sketch into (Pi X, Pi Y).
std::pair<DenseMatrix, DenseVector> split_response(const DenseMatrix& sketch);

}  // namespace sketchreg
