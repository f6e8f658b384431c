#pragma once

// Row sources for the sketchers and the on-disk data formats.
//
//   CSV      rectangular numeric CSV, response in the last column
//   SKDT     "SKDT" | u16 version | u64 n | u64 d_total | n * d_total f64 LE
//   updates  text lines "i,j,u": X[i, j] += u (duplicates and deletions allowed)
//
// A path of "-" reads stdin / writes stdout.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sketchreg/linalg.hpp"
#include "sketchreg/sketch.hpp"

namespace sketchreg {

class RowStream {
 public:
  virtual ~RowStream() = default;

  /// Fills `row` with the next d_total() values; false once exhausted.
  virtual bool next(std::vector<double>& row) = 0;

  std::uint64_t d_total() const noexcept { return d_total_; }
  /// Total row count when the source knows it up front (binary, in-memory).
  std::optional<std::uint64_t> n_hint() const noexcept { return n_hint_; }
  std::uint64_t rows_read() const noexcept { return rows_read_; }

 protected:
  std::uint64_t d_total_ = 0;
  std::optional<std::uint64_t> n_hint_;
  std::uint64_t rows_read_ = 0;
};

/// Throws IoError for unreadable files, ragged rows and non-numeric cells
/// (the message names the 1-based row and column).
std::unique_ptr<RowStream> read_csv(const std::filesystem::path& path, bool has_header);
std::unique_ptr<RowStream> read_binary(const std::filesystem::path& path);
/// Non-owning view of an in-memory [X, Y]; `data` must outlive the stream.
std::unique_ptr<RowStream> matrix_stream(const DenseMatrix& data);
/// Prepends a constant 1 column to every row of `inner`.
std::unique_ptr<RowStream> with_intercept(std::unique_ptr<RowStream> inner);

/// Drains a stream into a matrix.
DenseMatrix collect(RowStream& stream);

inline constexpr std::uint16_t kDataFormatVersion = 1;

/// Streaming SKDT writer; the row count is fixed by the header.
class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path& path, std::uint64_t n, std::uint64_t d_total);
  ~BinaryWriter();
  BinaryWriter(const BinaryWriter&) = delete;
  BinaryWriter& operator=(const BinaryWriter&) = delete;

  void write_row(std::span<const double> row);
  /// Flushes and checks that exactly n rows were written.
  void close();

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
  std::uint64_t n_ = 0;
  std::uint64_t d_total_ = 0;
  std::uint64_t written_ = 0;
  std::vector<char> buffer_;
  bool closed_ = false;
};

void write_binary(const std::filesystem::path& path, const DenseMatrix& data);
DenseMatrix read_binary_matrix(const std::filesystem::path& path);

class UpdateStream {
 public:
  explicit UpdateStream(const std::filesystem::path& path);
  ~UpdateStream();
  UpdateStream(const UpdateStream&) = delete;
  UpdateStream& operator=(const UpdateStream&) = delete;

  bool next(UpdateTriple& t);
  std::uint64_t lines_read() const noexcept { return line_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* in_ = nullptr;
  std::uint64_t line_ = 0;
};

std::unique_ptr<UpdateStream> read_updates(const std::filesystem::path& path);
std::vector<UpdateTriple> read_all_updates(const std::filesystem::path& path);
void write_updates(const std::filesystem::path& path, std::span<const UpdateTriple> updates);

/// Coalesces updates into an n x d_total matrix. Throws ContractError on
/// out-of-range indices.
DenseMatrix materialize_updates(std::span<const UpdateTriple> updates, std::uint64_t n,
                                std::uint64_t d_total);

}  // namespace sketchreg
