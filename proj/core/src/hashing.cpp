#include "sketchreg/hashing.hpp"

#include <bit>
#include <string>

#include "sketchreg/error.hpp"

namespace sketchreg::hashing {

namespace {

FourWiseCoefficients expand_four_wise(std::uint64_t& state) noexcept {
  FourWiseCoefficients out;
  for (auto& c : out.c) {
    // 61 uniform bits; the single value p itself folds to 0.
    std::uint64_t v = splitmix64(state) >> 3;
    c = v >= ProductionField::kPrime ? v - ProductionField::kPrime : v;
  }
  return out;
}

PairwiseCoefficients expand_pairwise(std::uint64_t& state) noexcept {
  PairwiseCoefficients out;
  out.a = splitmix64(state) | 1u;
  out.b = splitmix64(state);
  return out;
}

}  // namespace

SketchSeed::SketchSeed(std::uint64_t master) noexcept : master_(master) {
  std::uint64_t state = master;
  four_wise_ = expand_four_wise(state);
  pairwise_ = expand_pairwise(state);
}

SketchSeed SketchSeed::derive(std::uint64_t stream) const noexcept {
  std::uint64_t state = master_ ^ (0xD1B54A32D192ED03ull * (stream + 1));
  return SketchSeed(splitmix64(state));
}

std::array<std::byte, SketchSeed::kSerializedSize> SketchSeed::to_bytes() const noexcept {
  std::array<std::byte, kSerializedSize> out{};
  for (std::size_t i = 0; i < kSerializedSize; ++i) {
    out[i] = static_cast<std::byte>((master_ >> (8 * i)) & 0xFFu);
  }
  return out;
}

SketchSeed SketchSeed::from_bytes(std::span<const std::byte, kSerializedSize> bytes) noexcept {
  std::uint64_t master = 0;
  for (std::size_t i = 0; i < kSerializedSize; ++i) {
    master |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(bytes[i])) << (8 * i);
  }
  return SketchSeed(master);
}

int sign4(const FourWiseCoefficients& coeffs, std::uint64_t row_index) {
  if (row_index > kMaxSignIndex) {
    throw DomainError("sign4: row index " + std::to_string(row_index) +
                      " is outside the field range [0, 2^61 - 1)");
  }
  return sign4_unchecked(coeffs, row_index);
}

int sign4(const SketchSeed& seed, std::uint64_t row_index) {
  return sign4(seed.four_wise(), row_index);
}

bool is_power_of_two(std::uint64_t x) noexcept { return std::has_single_bit(x); }

unsigned log2_floor(std::uint64_t x) noexcept {
  return x == 0 ? 0u : static_cast<unsigned>(std::bit_width(x) - 1);
}

std::uint64_t bucket2(const PairwiseCoefficients& coeffs, std::uint64_t row_index,
                      std::uint64_t k) {
  if (!is_power_of_two(k)) {
    throw ContractError("bucket2: bucket count " + std::to_string(k) +
                        " is not a power of two");
  }
  return multiply_shift<64>(coeffs.a, coeffs.b, row_index, log2_floor(k));
}

std::uint64_t bucket2(const SketchSeed& seed, std::uint64_t row_index, std::uint64_t k) {
  return bucket2(seed.pairwise(), row_index, k);
}

}  // namespace sketchreg::hashing
