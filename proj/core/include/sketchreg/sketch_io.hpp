#pragma once

// SKRG sketch files (little-endian):
//   "SKRG" | u16 version | u8 method | u64 seed master | u64 k | u64 d_total
//   | u64 m (0 unless SRHT) | u64 rows_seen | k * d_total f64, row-major
// The values are the raw accumulator; readers rescale with finalize().

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sketchreg/sketch.hpp"

namespace sketchreg::io {

inline constexpr std::uint16_t kSketchFormatVersion = 1;
inline constexpr std::size_t kSketchHeaderSize = 4 + 2 + 1 + 8 + 8 * 4;

std::vector<std::byte> serialize_sketch(const SketchBuilder& sketch);
SketchBuilder deserialize_sketch(std::span<const std::byte> bytes);

void write_sketch(std::ostream& out, const SketchBuilder& sketch);
void write_sketch(const std::filesystem::path& path, const SketchBuilder& sketch);
SketchBuilder read_sketch(std::istream& in);
SketchBuilder read_sketch(const std::filesystem::path& path);

/// Finalized sketch as CSV, one sketch row per line, %.17g precision.
void write_sketch_csv(const std::filesystem::path& path, const SketchBuilder& sketch);

/// Fixed-width little-endian helpers shared by the binary formats.
void put_u8(std::vector<std::byte>& out, std::uint8_t v);
void put_u16(std::vector<std::byte>& out, std::uint16_t v);
void put_u64(std::vector<std::byte>& out, std::uint64_t v);
void put_f64(std::vector<std::byte>& out, double v);
std::uint16_t get_u16(const std::byte* p) noexcept;
std::uint64_t get_u64(const std::byte* p) noexcept;
double get_f64(const std::byte* p) noexcept;

}  // namespace sketchreg::io
