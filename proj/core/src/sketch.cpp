#include "sketchreg/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <string>

#include "sketchreg/error.hpp"

namespace sketchreg {

using hashing::SketchSeed;

std::string_view method_name(SketchMethod method) noexcept {
  switch (method) {
    case SketchMethod::Rad: return "rad";
    case SketchMethod::Srht: return "srht";
    case SketchMethod::Cw: return "cw";
    case SketchMethod::Gram: return "gram";
  }
  return "unknown";
}

SketchMethod parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rad") return SketchMethod::Rad;
  if (lower == "srht") return SketchMethod::Srht;
  if (lower == "cw") return SketchMethod::Cw;
  if (lower == "gram") return SketchMethod::Gram;
  throw ContractError("unknown sketch method '" + std::string(name) +
                      "' (expected rad, srht, cw or gram)");
}

std::optional<SketchMethod> method_from_tag(std::uint8_t tag) noexcept {
  if (tag >= 1 && tag <= 4) return static_cast<SketchMethod>(tag);
  return std::nullopt;
}

std::uint64_t next_power_of_two(std::uint64_t n) {
  if (n == 0) throw ContractError("next_power_of_two: n must be >= 1");
  if (n > (std::uint64_t{1} << 63)) throw ContractError("next_power_of_two: overflow");
  return std::bit_ceil(n);
}

std::uint64_t power_of_two_above(double x) {
  if (!(x >= 0.0) || x >= 0x1p62) {
    throw ContractError("power_of_two_above: argument out of range");
  }
  std::uint64_t p = 1;
  while (static_cast<double>(p) <= x) p <<= 1;
  return p;
}

namespace {

void require_unit_half(double v, const char* what) {
  if (!(v > 0.0 && v <= 0.5)) {
    throw ContractError(std::string(what) + " must lie in (0, 1/2], got " + std::to_string(v));
  }
}

}  // namespace

std::uint64_t target_dimension(SketchMethod method, std::uint64_t dimension, double epsilon,
                               double alpha, bool alpha_strict) {
  require_unit_half(epsilon, "epsilon");
  require_unit_half(alpha, "alpha");
  if (dimension == 0) throw ContractError("target_dimension: dimension must be >= 1");
  const double d = static_cast<double>(dimension);
  switch (method) {
    case SketchMethod::Rad:
    case SketchMethod::Srht: {
      const double k = std::ceil(d * std::log(d) / (epsilon * epsilon));
      return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
    }
    case SketchMethod::Cw: {
      const double bound = alpha_strict ? d * d / (epsilon * epsilon * alpha)
                                        : d * d / (20.0 * epsilon * epsilon);
      return power_of_two_above(bound);
    }
    case SketchMethod::Gram:
      if (dimension < 2) throw ContractError("gram sketch needs at least one X column");
      return dimension - 1;
  }
  throw ContractError("target_dimension: invalid method");
}

// --------------------------------------------------------------------------

SketchBuilder::SketchBuilder(SketchMethod method, std::uint64_t d_total, std::uint64_t k,
                             std::optional<std::uint64_t> n_hint, SketchSeed seed,
                             BuilderOptions options)
    : method_(method), d_total_(d_total), k_(k), n_hint_(n_hint), seed_(seed), options_(options) {
  if (d_total == 0) throw ContractError("sketch builder: d_total must be >= 1");
  switch (method) {
    case SketchMethod::Rad:
      if (k == 0) throw ContractError("sketch builder: k must be >= 1");
      break;
    case SketchMethod::Srht:
      if (k == 0) throw ContractError("sketch builder: k must be >= 1");
      if (!n_hint || *n_hint == 0) {
        throw ContractError("srht sketch requires a row-count hint n_hint >= 1");
      }
      m_ = next_power_of_two(*n_hint);
      if (options_.srht_mode == SrhtMode::Block) {
        if (!hashing::is_power_of_two(options_.block_rows)) {
          throw ContractError("srht block size must be a power of two");
        }
        options_.block_rows = std::min<std::uint64_t>(options_.block_rows, m_);
      }
      break;
    case SketchMethod::Cw:
      if (!hashing::is_power_of_two(k)) {
        throw ContractError("cw sketch requires k to be a power of two, got " + std::to_string(k));
      }
      break;
    case SketchMethod::Gram:
      if (d_total < 2) throw ContractError("gram sketch needs at least one X column");
      k_ = d_total - 1;
      break;
  }
  acc_ = DenseMatrix::Zero(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(d_total_));
  init_caches();
}

SketchBuilder SketchBuilder::restore(SketchMethod method, std::uint64_t d_total, std::uint64_t k,
                                     std::uint64_t m, std::uint64_t rows_seen, SketchSeed seed,
                                     DenseMatrix accumulator) {
  std::optional<std::uint64_t> hint;
  if (method == SketchMethod::Srht) {
    if (!hashing::is_power_of_two(m)) {
      throw ContractError("srht sketch: stored padding dimension is not a power of two");
    }
    hint = m;
  }
  SketchBuilder b(method, d_total, k, hint, seed);
  if (accumulator.rows() != static_cast<Eigen::Index>(b.k_) ||
      accumulator.cols() != static_cast<Eigen::Index>(d_total)) {
    throw ContractError("restored accumulator has the wrong shape");
  }
  b.acc_ = std::move(accumulator);
  b.rows_seen_ = rows_seen;
  return b;
}

void SketchBuilder::init_caches() {
  if (method_ == SketchMethod::Rad) {
    row_hashes_.resize(k_);
    for (std::uint64_t r = 0; r < k_; ++r) row_hashes_[r] = seed_.derive(r).four_wise();
  } else if (method_ == SketchMethod::Srht) {
    sampled_rows_.resize(k_);
    for (std::uint64_t r = 0; r < k_; ++r) sampled_rows_[r] = hashing::bucket2(seed_, r, m_);
  }
}

double SketchBuilder::scale() const noexcept {
  if (method_ == SketchMethod::Rad || method_ == SketchMethod::Srht) {
    return 1.0 / std::sqrt(static_cast<double>(k_));
  }
  return 1.0;
}

void SketchBuilder::check_row_index(std::uint64_t i) const {
  if (method_ == SketchMethod::Srht) {
    if (i >= m_) {
      throw ContractError("srht sketch: row index " + std::to_string(i) +
                          " exceeds padding dimension m = " + std::to_string(m_));
    }
    return;
  }
  if (n_hint_ && i >= *n_hint_) {
    throw ContractError("row index " + std::to_string(i) + " exceeds n_hint = " +
                        std::to_string(*n_hint_));
  }
  if (i > hashing::kMaxSignIndex) {
    throw DomainError("row index " + std::to_string(i) + " is outside the hash domain");
  }
}

// acc += weight * (column i of Pi) (x) row, unscaled.
void SketchBuilder::add_scaled_column(std::uint64_t i, std::span<const double> row,
                                      double weight) {
  const std::size_t width = row.size();
  double* acc = acc_.data();
  const double* x = row.data();
  switch (method_) {
    case SketchMethod::Rad: {
      for (std::uint64_t r = 0; r < k_; ++r) {
        const double s = weight * hashing::sign4_unchecked(row_hashes_[r], i);
        double* dst = acc + r * d_total_;
        for (std::size_t j = 0; j < width; ++j) dst[j] += s * x[j];
      }
      break;
    }
    case SketchMethod::Srht: {
      const double di = weight * hashing::sign4_unchecked(seed_.four_wise(), i);
      for (std::uint64_t r = 0; r < k_; ++r) {
        const double s = di * linalg::hadamard_entry(sampled_rows_[r], i);
        double* dst = acc + r * d_total_;
        for (std::size_t j = 0; j < width; ++j) dst[j] += s * x[j];
      }
      break;
    }
    case SketchMethod::Cw: {
      const double s = weight * hashing::sign4_unchecked(seed_.four_wise(), i);
      const std::uint64_t bucket = hashing::multiply_shift<64>(
          seed_.pairwise().a, seed_.pairwise().b, i, hashing::log2_floor(k_));
      double* dst = acc + bucket * d_total_;
      for (std::size_t j = 0; j < width; ++j) dst[j] += s * x[j];
      break;
    }
    case SketchMethod::Gram: {
      // Column i of Pi = X^T is x_i, the first d_total - 1 entries of the row.
      for (std::uint64_t r = 0; r < k_; ++r) {
        const double s = weight * x[r];
        if (s == 0.0) continue;
        double* dst = acc + r * d_total_;
        for (std::size_t j = 0; j < width; ++j) dst[j] += s * x[j];
      }
      break;
    }
  }
}

void SketchBuilder::push_row(std::uint64_t i, std::span<const double> row) {
  if (row.size() != d_total_) {
    throw ContractError("push_row: row has " + std::to_string(row.size()) +
                        " entries, expected d_total = " + std::to_string(d_total_));
  }
  check_row_index(i);
  ++rows_seen_;
  if (method_ == SketchMethod::Srht && options_.srht_mode == SrhtMode::Block) {
    buffer_row(i, row);
    return;
  }
  add_scaled_column(i, row, 1.0);
}

void SketchBuilder::push_rows(std::uint64_t first_row, const DenseMatrix& rows) {
  if (rows.cols() != static_cast<Eigen::Index>(d_total_)) {
    throw ContractError("push_rows: block has " + std::to_string(rows.cols()) +
                        " columns, expected d_total = " + std::to_string(d_total_));
  }
  if (method_ == SketchMethod::Rad || method_ == SketchMethod::Gram) {
    // Dense embeddings: materialize the block of Pi columns and use one GEMM.
    constexpr Eigen::Index kChunk = 256;
    DenseMatrix pi_block;
    for (Eigen::Index c = 0; c < rows.rows(); c += kChunk) {
      const Eigen::Index b = std::min(kChunk, rows.rows() - c);
      const auto chunk = rows.middleRows(c, b);
      for (Eigen::Index t = 0; t < b; ++t) check_row_index(first_row + static_cast<std::uint64_t>(c + t));
      if (method_ == SketchMethod::Gram) {
        acc_.noalias() += chunk.leftCols(static_cast<Eigen::Index>(k_)).transpose() * chunk;
      } else {
        pi_block.resize(static_cast<Eigen::Index>(k_), b);
        for (std::uint64_t r = 0; r < k_; ++r) {
          for (Eigen::Index t = 0; t < b; ++t) {
            pi_block(static_cast<Eigen::Index>(r), t) = hashing::sign4_unchecked(
                row_hashes_[r], first_row + static_cast<std::uint64_t>(c + t));
          }
        }
        acc_.noalias() += pi_block * chunk;
      }
      rows_seen_ += static_cast<std::uint64_t>(b);
    }
    return;
  }
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    push_row(first_row + static_cast<std::uint64_t>(r),
             std::span<const double>(rows.row(r).data(), d_total_));
  }
}

void SketchBuilder::push_update(const UpdateTriple& t) {
  if (method_ == SketchMethod::Gram) {
    throw ContractError("gram sketch does not accept turnstile updates: its embedding X^T "
                        "depends on the data");
  }
  if (t.col >= d_total_) {
    throw ContractError("push_update: column " + std::to_string(t.col) +
                        " out of range for d_total = " + std::to_string(d_total_));
  }
  check_row_index(t.row);
  if (t.value == 0.0) return;
  // A single-entry row: only column t.col of the accumulator moves.
  double* acc = acc_.data();
  switch (method_) {
    case SketchMethod::Cw: {
      const double s = t.value * hashing::sign4_unchecked(seed_.four_wise(), t.row);
      const std::uint64_t bucket = hashing::multiply_shift<64>(
          seed_.pairwise().a, seed_.pairwise().b, t.row, hashing::log2_floor(k_));
      acc[bucket * d_total_ + t.col] += s;
      break;
    }
    case SketchMethod::Rad:
      for (std::uint64_t r = 0; r < k_; ++r) {
        acc[r * d_total_ + t.col] += t.value * hashing::sign4_unchecked(row_hashes_[r], t.row);
      }
      break;
    case SketchMethod::Srht: {
      const double di = t.value * hashing::sign4_unchecked(seed_.four_wise(), t.row);
      for (std::uint64_t r = 0; r < k_; ++r) {
        acc[r * d_total_ + t.col] += di * linalg::hadamard_entry(sampled_rows_[r], t.row);
      }
      break;
    }
    case SketchMethod::Gram:
      break;
  }
}

// SRHT block mode. Rows base + t, t < B, with base a multiple of B satisfy
//   H_m[r, base + t] = (-1)^popcount(r & base) * H_B[r mod B, t],
// so one length-B FWHT per column serves every sampled row r.
void SketchBuilder::buffer_row(std::uint64_t i, std::span<const double> row) {
  const std::uint64_t b = options_.block_rows;
  const std::uint64_t base = i & ~(b - 1);
  if (block_dirty_ && base != block_base_) flush();
  if (block_.rows() == 0) {
    block_ = DenseMatrix::Zero(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d_total_));
  }
  block_base_ = base;
  block_dirty_ = true;
  const double di = hashing::sign4_unchecked(seed_.four_wise(), i);
  double* dst = block_.data() + (i - base) * d_total_;
  for (std::size_t j = 0; j < d_total_; ++j) dst[j] += di * row[j];
}

void SketchBuilder::flush() {
  if (!block_dirty_) return;
  linalg::fwht_columns(block_);
  const std::uint64_t mask = options_.block_rows - 1;
  for (std::uint64_t r = 0; r < k_; ++r) {
    const std::uint64_t sampled = sampled_rows_[r];
    const double s = linalg::hadamard_entry(sampled, block_base_);
    const double* src = block_.data() + (sampled & mask) * d_total_;
    double* dst = acc_.data() + r * d_total_;
    for (std::size_t j = 0; j < d_total_; ++j) dst[j] += s * src[j];
  }
  block_.setZero();
  block_dirty_ = false;
}

DenseMatrix SketchBuilder::finalize() const {
  if (block_dirty_) {
    SketchBuilder copy = *this;
    copy.flush();
    return copy.finalize();
  }
  const double s = scale();
  if (s == 1.0) return acc_;
  return acc_ * s;
}

bool SketchBuilder::compatible_with(const SketchBuilder& other) const noexcept {
  return method_ == other.method_ && k_ == other.k_ && d_total_ == other.d_total_ &&
         m_ == other.m_ && seed_ == other.seed_;
}

std::size_t SketchBuilder::memory_bytes() const noexcept {
  return sizeof(double) * static_cast<std::size_t>(acc_.size() + block_.size()) +
         sizeof(hashing::FourWiseCoefficients) * row_hashes_.capacity() +
         sizeof(std::uint64_t) * sampled_rows_.capacity();
}

SketchBuilder merge(const SketchBuilder& a, const SketchBuilder& b) {
  if (!a.compatible_with(b)) {
    throw MergeError("cannot merge sketches with different configurations (" +
                     std::string(method_name(a.method())) + " k=" + std::to_string(a.k()) +
                     " d=" + std::to_string(a.d_total()) + " m=" + std::to_string(a.m()) +
                     " seed=" + std::to_string(a.seed().master()) + " vs " +
                     std::string(method_name(b.method())) + " k=" + std::to_string(b.k()) +
                     " d=" + std::to_string(b.d_total()) + " m=" + std::to_string(b.m()) +
                     " seed=" + std::to_string(b.seed().master()) + ")");
  }
  SketchBuilder out = a;
  out.flush();
  if (b.has_pending()) {
    SketchBuilder rhs = b;
    rhs.flush();
    out.acc_ += rhs.acc_;
  } else {
    out.acc_ += b.acc_;
  }
  out.rows_seen_ = a.rows_seen_ + b.rows_seen_;
  return out;
}

DenseMatrix gram_sketch(const DenseMatrix& data) {
  if (data.cols() < 2) throw ContractError("gram_sketch: need at least one X column and Y");
  SketchBuilder b(SketchMethod::Gram, static_cast<std::uint64_t>(data.cols()), 0, std::nullopt,
                  SketchSeed(0));
  b.push_rows(0, data);
  return b.finalize();
}

std::pair<DenseMatrix, DenseVector> split_response(const DenseMatrix& sketch) {
  if (sketch.cols() < 1) throw ContractError("split_response: sketch has no columns");
  const Eigen::Index d = sketch.cols() - 1;
  return {sketch.leftCols(d), sketch.col(d)};
}

}  // namespace sketchreg
