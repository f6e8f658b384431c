#include "sketchreg/sketch_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "sketchreg/error.hpp"

namespace sketchreg::io {

void put_u8(std::vector<std::byte>& out, std::uint8_t v) { out.push_back(std::byte{v}); }

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xFFu));
  out.push_back(static_cast<std::byte>(v >> 8));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::vector<std::byte>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint16_t get_u16(const std::byte* p) noexcept {
  return static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) |
                                    (std::to_integer<unsigned>(p[1]) << 8));
}

std::uint64_t get_u64(const std::byte* p) noexcept {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  return v;
}

double get_f64(const std::byte* p) noexcept { return std::bit_cast<double>(get_u64(p)); }

namespace {

struct Header {
  SketchMethod method;
  hashing::SketchSeed seed;
  std::uint64_t k, d_total, m, rows_seen;
};

std::vector<std::byte> header_bytes(const SketchBuilder& sketch) {
  std::vector<std::byte> out;
  out.reserve(kSketchHeaderSize);
  for (char c : {'S', 'K', 'R', 'G'}) out.push_back(static_cast<std::byte>(c));
  put_u16(out, kSketchFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(sketch.method()));
  for (std::byte b : sketch.seed().to_bytes()) out.push_back(b);
  put_u64(out, sketch.k());
  put_u64(out, sketch.d_total());
  put_u64(out, sketch.m());
  put_u64(out, sketch.rows_seen());
  return out;
}

// `payload` is the byte count following the header.
Header parse_header(const std::byte* p, std::uint64_t payload) {
  if (std::memcmp(p, "SKRG", 4) != 0) throw IoError("not a sketch file: bad magic");
  const std::uint16_t version = get_u16(p + 4);
  if (version != kSketchFormatVersion) {
    throw IoError("unsupported sketch format version " + std::to_string(version));
  }
  const auto method = method_from_tag(std::to_integer<std::uint8_t>(p[6]));
  if (!method) throw IoError("sketch file has unknown method tag");
  Header h{*method,
           hashing::SketchSeed::from_bytes(
               std::span<const std::byte, hashing::SketchSeed::kSerializedSize>(p + 7, 8)),
           get_u64(p + 15), get_u64(p + 23), get_u64(p + 31), get_u64(p + 39)};
  if (h.d_total == 0 || h.d_total > (std::uint64_t{1} << 24) || payload % (8 * h.d_total) != 0 ||
      payload / (8 * h.d_total) != h.k) {
    throw IoError("sketch file payload size does not match its header");
  }
  return h;
}

SketchBuilder restore(const Header& h, DenseMatrix acc) {
  try {
    return SketchBuilder::restore(h.method, h.d_total, h.k, h.m, h.rows_seen, h.seed, std::move(acc));
  } catch (const ContractError& e) {
    throw IoError(std::string("inconsistent sketch file: ") + e.what());
  }
}

void write_payload(std::ostream& out, const DenseMatrix& acc) {
  constexpr std::size_t kChunk = 1 << 14;
  std::vector<std::byte> buf;
  buf.reserve(8 * kChunk);
  const auto total = static_cast<std::size_t>(acc.size());
  for (std::size_t i = 0; i < total; i += kChunk) {
    buf.clear();
    const std::size_t end = std::min(total, i + kChunk);
    for (std::size_t j = i; j < end; ++j) put_f64(buf, acc.data()[j]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

}  // namespace

std::vector<std::byte> serialize_sketch(const SketchBuilder& sketch) {
  SketchBuilder flushed = sketch;
  flushed.flush();
  const DenseMatrix& acc = flushed.accumulator();
  std::vector<std::byte> out = header_bytes(flushed);
  out.reserve(kSketchHeaderSize + 8 * static_cast<std::size_t>(acc.size()));
  for (Eigen::Index i = 0; i < acc.size(); ++i) put_f64(out, acc.data()[i]);
  return out;
}

SketchBuilder deserialize_sketch(std::span<const std::byte> bytes) {
  if (bytes.size() < kSketchHeaderSize) throw IoError("sketch file truncated: header incomplete");
  const Header h = parse_header(bytes.data(), bytes.size() - kSketchHeaderSize);
  DenseMatrix acc(static_cast<Eigen::Index>(h.k), static_cast<Eigen::Index>(h.d_total));
  const std::byte* v = bytes.data() + kSketchHeaderSize;
  for (Eigen::Index i = 0; i < acc.size(); ++i) acc.data()[i] = get_f64(v + 8 * i);
  return restore(h, std::move(acc));
}

void write_sketch(std::ostream& out, const SketchBuilder& sketch) {
  // Only a sketch with buffered SRHT rows needs a flushed copy.
  std::optional<SketchBuilder> flushed;
  if (sketch.has_pending()) {
    flushed = sketch;
    flushed->flush();
  }
  const SketchBuilder& s = flushed ? *flushed : sketch;
  const auto header = header_bytes(s);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  write_payload(out, s.accumulator());
  if (!out) throw IoError("failed to write sketch");
}

void write_sketch(const std::filesystem::path& path, const SketchBuilder& sketch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_sketch(out, sketch);
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
}

SketchBuilder read_sketch(std::istream& in) {
  // Small inputs (and non-seekable streams) go through the byte parser.
  const std::istream::pos_type start = in.tellg();
  if (start == std::istream::pos_type(-1) || !in.seekg(0, std::ios::end)) {
    in.clear();
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_sketch(std::as_bytes(std::span<const char>(raw)));
  }
  const auto size = static_cast<std::uint64_t>(in.tellg() - start);
  in.seekg(start);
  if (size < kSketchHeaderSize) throw IoError("sketch file truncated: header incomplete");
  std::array<std::byte, kSketchHeaderSize> head{};
  in.read(reinterpret_cast<char*>(head.data()), kSketchHeaderSize);
  const Header h = parse_header(head.data(), size - kSketchHeaderSize);
  DenseMatrix acc(static_cast<Eigen::Index>(h.k), static_cast<Eigen::Index>(h.d_total));
  constexpr std::size_t kChunk = 1 << 14;
  std::vector<std::byte> buf(8 * kChunk);
  const auto total = static_cast<std::size_t>(acc.size());
  for (std::size_t i = 0; i < total; i += kChunk) {
    const std::size_t count = std::min(kChunk, total - i);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(8 * count))) {
      throw IoError("sketch file truncated: payload incomplete");
    }
    for (std::size_t j = 0; j < count; ++j) acc.data()[i + j] = get_f64(buf.data() + 8 * j);
  }
  return restore(h, std::move(acc));
}

SketchBuilder read_sketch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sketch file " + path.string());
  return read_sketch(in);
}

void write_sketch_csv(const std::filesystem::path& path, const SketchBuilder& sketch) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  const DenseMatrix s = sketch.finalize();
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      std::fprintf(f, c == 0 ? "%.17g" : ",%.17g", s(r, c));
    }
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw IoError("failed to write " + path.string());
}

}  // namespace sketchreg::io
