#include "sketchreg/data.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>

#include "sketchreg/error.hpp"
#include "sketchreg/sketch_io.hpp"

namespace sketchreg {
namespace {

constexpr std::size_t kDataHeaderSize = 4 + 2 + 8 + 8;

bool is_stdio(const std::filesystem::path& path) { return path == "-"; }

std::unique_ptr<std::ifstream> open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  auto file = std::make_unique<std::ifstream>(path, mode);
  if (!*file) throw IoError("cannot open " + path.string() + " for reading");
  return file;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool blank(std::string_view line) { return trim(line).empty(); }

std::string where(std::uint64_t row, std::uint64_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

// Parses one numeric cell; quoted cells ("1.5") are accepted.
std::optional<double> parse_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
    cell = trim(cell.substr(1, cell.size() - 2));
  }
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t count_fields(std::string_view line) {
  std::size_t n = 1;
  for (char c : line) n += (c == ',');
  return n;
}

class CsvRowStream final : public RowStream {
 public:
  CsvRowStream(const std::filesystem::path& path, bool has_header) {
    if (is_stdio(path)) {
      in_ = &std::cin;
    } else {
      file_ = open_in(path, std::ios::in);
      in_ = file_.get();
    }
    if (has_header) {
      while (std::getline(*in_, line_)) {
        ++line_no_;
        if (!blank(line_)) break;
      }
    }
    have_pending_ = advance();
    if (have_pending_) d_total_ = count_fields(line_);
  }

  bool next(std::vector<double>& row) override {
    if (!have_pending_) return false;
    const std::uint64_t row_no = line_no_;
    row.resize(d_total_);
    std::string_view rest(line_);
    std::uint64_t col = 0;
    while (true) {
      const std::size_t comma = rest.find(',');
      const std::string_view cell = rest.substr(0, comma);
      if (col >= d_total_) {
        throw IoError("ragged CSV: " + where(row_no, col + 1) + " exceeds " +
                      std::to_string(d_total_) + " columns");
      }
      const auto v = parse_cell(cell);
      if (!v) {
        throw IoError("non-numeric CSV cell at " + where(row_no, col + 1) + ": '" +
                      std::string(trim(cell)) + "'");
      }
      row[col++] = *v;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (col != d_total_) {
      throw IoError("ragged CSV: row " + std::to_string(row_no) + " has " + std::to_string(col) +
                    " columns, expected " + std::to_string(d_total_));
    }
    ++rows_read_;
    have_pending_ = advance();
    return true;
  }

 private:
  bool advance() {
    while (std::getline(*in_, line_)) {
      ++line_no_;
      if (!blank(line_)) return true;
    }
    if (in_->bad()) throw IoError("read error after line " + std::to_string(line_no_));
    return false;
  }

  std::unique_ptr<std::ifstream> file_;
  std::istream* in_ = nullptr;
  std::string line_;
  std::uint64_t line_no_ = 0;
  bool have_pending_ = false;
};

class BinaryRowStream final : public RowStream {
 public:
  explicit BinaryRowStream(const std::filesystem::path& path) {
    if (is_stdio(path)) {
      in_ = &std::cin;
    } else {
      file_ = open_in(path, std::ios::in | std::ios::binary);
      in_ = file_.get();
    }
    std::byte header[kDataHeaderSize];
    in_->read(reinterpret_cast<char*>(header), kDataHeaderSize);
    if (in_->gcount() != static_cast<std::streamsize>(kDataHeaderSize)) {
      throw IoError("data file truncated: header incomplete");
    }
    if (std::memcmp(header, "SKDT", 4) != 0) throw IoError("not a data file: bad magic");
    const std::uint16_t version = io::get_u16(header + 4);
    if (version != kDataFormatVersion) {
      throw IoError("unsupported data format version " + std::to_string(version));
    }
    n_ = io::get_u64(header + 6);
    d_total_ = io::get_u64(header + 14);
    if (d_total_ > (std::uint64_t{1} << 24)) throw IoError("data file column count is implausible");
    n_hint_ = n_;
    buffer_.resize(8 * d_total_);
  }

  bool next(std::vector<double>& row) override {
    if (rows_read_ >= n_) return false;
    in_->read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (in_->gcount() != static_cast<std::streamsize>(buffer_.size())) {
      throw IoError("data file truncated at row " + std::to_string(rows_read_));
    }
    row.resize(d_total_);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(row.data(), buffer_.data(), buffer_.size());
    } else {
      for (std::uint64_t j = 0; j < d_total_; ++j) row[j] = io::get_f64(buffer_.data() + 8 * j);
    }
    ++rows_read_;
    return true;
  }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* in_ = nullptr;
  std::uint64_t n_ = 0;
  std::vector<std::byte> buffer_;
};

class MatrixRowStream final : public RowStream {
 public:
  explicit MatrixRowStream(const DenseMatrix& data) : data_(data) {
    d_total_ = static_cast<std::uint64_t>(data.cols());
    n_hint_ = static_cast<std::uint64_t>(data.rows());
  }

  bool next(std::vector<double>& row) override {
    if (rows_read_ >= static_cast<std::uint64_t>(data_.rows())) return false;
    const auto r = static_cast<Eigen::Index>(rows_read_);
    row.assign(data_.row(r).data(), data_.row(r).data() + data_.cols());
    ++rows_read_;
    return true;
  }

 private:
  const DenseMatrix& data_;
};

class InterceptStream final : public RowStream {
 public:
  explicit InterceptStream(std::unique_ptr<RowStream> inner) : inner_(std::move(inner)) {
    d_total_ = inner_->d_total() + 1;
    n_hint_ = inner_->n_hint();
  }

  bool next(std::vector<double>& row) override {
    if (!inner_->next(scratch_)) return false;
    row.resize(scratch_.size() + 1);
    row[0] = 1.0;
    std::copy(scratch_.begin(), scratch_.end(), row.begin() + 1);
    ++rows_read_;
    return true;
  }

 private:
  std::unique_ptr<RowStream> inner_;
  std::vector<double> scratch_;
};

}  // namespace

std::unique_ptr<RowStream> read_csv(const std::filesystem::path& path, bool has_header) {
  return std::make_unique<CsvRowStream>(path, has_header);
}

std::unique_ptr<RowStream> read_binary(const std::filesystem::path& path) {
  return std::make_unique<BinaryRowStream>(path);
}

std::unique_ptr<RowStream> matrix_stream(const DenseMatrix& data) {
  return std::make_unique<MatrixRowStream>(data);
}

std::unique_ptr<RowStream> with_intercept(std::unique_ptr<RowStream> inner) {
  return std::make_unique<InterceptStream>(std::move(inner));
}

DenseMatrix collect(RowStream& stream) {
  std::vector<double> values;
  if (stream.n_hint()) values.reserve(*stream.n_hint() * stream.d_total());
  std::vector<double> row;
  std::uint64_t n = 0;
  while (stream.next(row)) {
    values.insert(values.end(), row.begin(), row.end());
    ++n;
  }
  DenseMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(stream.d_total()));
  if (!values.empty()) std::memcpy(out.data(), values.data(), values.size() * sizeof(double));
  return out;
}

BinaryWriter::BinaryWriter(const std::filesystem::path& path, std::uint64_t n,
                           std::uint64_t d_total)
    : n_(n), d_total_(d_total) {
  if (is_stdio(path)) {
    out_ = &std::cout;
  } else {
    file_ = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!*file_) throw IoError("cannot open " + path.string() + " for writing");
    out_ = file_.get();
  }
  std::vector<std::byte> header;
  for (char c : {'S', 'K', 'D', 'T'}) header.push_back(static_cast<std::byte>(c));
  io::put_u16(header, kDataFormatVersion);
  io::put_u64(header, n);
  io::put_u64(header, d_total);
  out_->write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  buffer_.resize(8 * d_total);
}

BinaryWriter::~BinaryWriter() {
  if (!closed_ && out_ != nullptr) out_->flush();
}

void BinaryWriter::write_row(std::span<const double> row) {
  if (row.size() != d_total_) {
    throw ContractError("row has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(d_total_));
  }
  if (written_ >= n_) throw ContractError("more rows written than the header declares");
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(buffer_.data(), row.data(), buffer_.size());
  } else {
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(row[j]);
      for (int b = 0; b < 8; ++b) buffer_[8 * j + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
  out_->write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  ++written_;
}

void BinaryWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_->flush();
  if (!*out_) throw IoError("write failed");
  if (written_ != n_) {
    throw ContractError("wrote " + std::to_string(written_) + " rows, header declares " +
                        std::to_string(n_));
  }
}

void write_binary(const std::filesystem::path& path, const DenseMatrix& data) {
  BinaryWriter writer(path, static_cast<std::uint64_t>(data.rows()),
                      static_cast<std::uint64_t>(data.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    writer.write_row(std::span<const double>(data.row(r).data(), static_cast<std::size_t>(data.cols())));
  }
  writer.close();
}

DenseMatrix read_binary_matrix(const std::filesystem::path& path) {
  auto stream = read_binary(path);
  return collect(*stream);
}

UpdateStream::UpdateStream(const std::filesystem::path& path) {
  if (is_stdio(path)) {
    in_ = &std::cin;
  } else {
    file_ = open_in(path, std::ios::in);
    in_ = file_.get();
  }
}

UpdateStream::~UpdateStream() = default;

bool UpdateStream::next(UpdateTriple& t) {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::string_view cells[3];
    std::size_t count = 0;
    while (count < 3) {
      const std::size_t comma = rest.find(',');
      cells[count++] = trim(rest.substr(0, comma));
      if (comma == std::string_view::npos) {
        rest = {};
        break;
      }
      rest.remove_prefix(comma + 1);
      if (count == 3) {
        throw IoError("update line " + std::to_string(line_) + " has more than 3 fields");
      }
    }
    if (count != 3) {
      throw IoError("update line " + std::to_string(line_) + " needs 3 fields \"i,j,u\"");
    }
    std::uint64_t idx[2];
    for (int c = 0; c < 2; ++c) {
      const auto [ptr, ec] =
          std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), idx[c]);
      if (cells[c].empty() || ec != std::errc{} || ptr != cells[c].data() + cells[c].size()) {
        throw IoError("update line " + std::to_string(line_) + ", field " + std::to_string(c + 1) +
                      ": '" + std::string(cells[c]) + "' is not a non-negative integer");
      }
    }
    const auto u = parse_cell(cells[2]);
    if (!u) {
      throw IoError("update line " + std::to_string(line_) + ", field 3: '" +
                    std::string(cells[2]) + "' is not a number");
    }
    t = UpdateTriple{idx[0], idx[1], *u};
    return true;
  }
  if (in_->bad()) throw IoError("read error after update line " + std::to_string(line_));
  return false;
}

std::unique_ptr<UpdateStream> read_updates(const std::filesystem::path& path) {
  return std::make_unique<UpdateStream>(path);
}

std::vector<UpdateTriple> read_all_updates(const std::filesystem::path& path) {
  UpdateStream stream(path);
  std::vector<UpdateTriple> out;
  UpdateTriple t;
  while (stream.next(t)) out.push_back(t);
  return out;
}

void write_updates(const std::filesystem::path& path, std::span<const UpdateTriple> updates) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[96];
  for (const UpdateTriple& t : updates) {
    const int len = std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g\n",
                                  static_cast<unsigned long long>(t.row),
                                  static_cast<unsigned long long>(t.col), t.value);
    out.write(buf, len);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DenseMatrix materialize_updates(std::span<const UpdateTriple> updates, std::uint64_t n,
                                std::uint64_t d_total) {
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d_total));
  for (const UpdateTriple& t : updates) {
    if (t.row >= n || t.col >= d_total) {
      throw ContractError("update (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                          ") outside a " + std::to_string(n) + " x " + std::to_string(d_total) +
                          " matrix");
    }
    out(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) += t.value;
  }
  return out;
}

}  // namespace sketchreg
