#pragma once

// Limited-independence hash families. Every random entry of a sketching
// matrix is a pure function of a 64-bit master seed and its matrix indices,
// so the k x n embedding is never stored.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace sketchreg::hashing {

__extension__ using uint128 = unsigned __int128;

/// Prime field Z_p with p = 2^Bits - 1 a Mersenne prime. Bits = 61 is the
/// production field; Bits = 5 (p = 31) is small enough to enumerate.
template <unsigned Bits>
struct MersenneField {
  static_assert(Bits >= 2 && Bits <= 61);
  static constexpr std::uint64_t kPrime = (std::uint64_t{1} << Bits) - 1;

  static constexpr std::uint64_t reduce(uint128 x) noexcept {
    // x < p^2 < 2^(2*Bits); two folds bring it below 2p.
    std::uint64_t lo = static_cast<std::uint64_t>(x & kPrime);
    uint128 hi = x >> Bits;
    std::uint64_t r = lo + static_cast<std::uint64_t>(hi & kPrime) +
                      static_cast<std::uint64_t>(hi >> Bits);
    r = (r & kPrime) + (r >> Bits);
    return r >= kPrime ? r - kPrime : r;
  }

  static constexpr std::uint64_t mul(std::uint64_t a, std::uint64_t b) noexcept {
    return reduce(static_cast<uint128>(a) * b);
  }

  static constexpr std::uint64_t add(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t r = a + b;
    return r >= kPrime ? r - kPrime : r;
  }
};

using ProductionField = MersenneField<61>;

/// Degree-3 polynomial h(x) = c3 x^3 + c2 x^2 + c1 x + c0 over Z_p.
/// With coefficients uniform on Z_p^4 the values at any four distinct
/// points are independent and uniform on Z_p.
template <class Field>
constexpr std::uint64_t cubic_hash(const std::array<std::uint64_t, 4>& c,
                                   std::uint64_t x) noexcept {
  std::uint64_t h = c[3];
  h = Field::add(Field::mul(h, x), c[2]);
  h = Field::add(Field::mul(h, x), c[1]);
  h = Field::add(Field::mul(h, x), c[0]);
  return h;
}

/// Sign from the low bit of a field element: even -> +1, odd -> -1.
/// P(+1) = (p+1)/(2p), a bias of 1/(2p) that is 2^-62 in production.
constexpr int sign_of(std::uint64_t field_value) noexcept {
  return (field_value & 1u) ? -1 : 1;
}

/// Multiply-shift on W-bit words: ((a*x + b) mod 2^W) >> (W - log2k).
/// a must be odd. W = 64 in production, W = 8 for the exhaustive oracle.
template <unsigned W>
constexpr std::uint64_t multiply_shift(std::uint64_t a, std::uint64_t b,
                                       std::uint64_t x,
                                       unsigned log2_buckets) noexcept {
  static_assert(W >= 1 && W <= 64);
  if (log2_buckets == 0) return 0;
  std::uint64_t mask = W == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << W) - 1);
  std::uint64_t v = (a * x + b) & mask;
  return v >> (W - log2_buckets);
}

struct FourWiseCoefficients {
  std::array<std::uint64_t, 4> c{};
  friend bool operator==(const FourWiseCoefficients&, const FourWiseCoefficients&) = default;
};

struct PairwiseCoefficients {
  std::uint64_t a = 1;  // odd
  std::uint64_t b = 0;
  friend bool operator==(const PairwiseCoefficients&, const PairwiseCoefficients&) = default;
};

/// splitmix64 step; the deterministic expander behind every seed.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Compact random state of a sketching matrix. Only the master word is
/// stored; the 4-wise and pairwise coefficients are re-derived from it.
class SketchSeed {
 public:
  static constexpr std::size_t kSerializedSize = 8;

  explicit SketchSeed(std::uint64_t master = 0) noexcept;

  std::uint64_t master() const noexcept { return master_; }
  const FourWiseCoefficients& four_wise() const noexcept { return four_wise_; }
  const PairwiseCoefficients& pairwise() const noexcept { return pairwise_; }

  /// Independent-looking child seed for sub-stream `stream` (e.g. one per
  /// row of a dense sign matrix).
  SketchSeed derive(std::uint64_t stream) const noexcept;

  /// 8 little-endian bytes of the master word.
  std::array<std::byte, kSerializedSize> to_bytes() const noexcept;
  static SketchSeed from_bytes(std::span<const std::byte, kSerializedSize> bytes) noexcept;

  friend bool operator==(const SketchSeed& x, const SketchSeed& y) noexcept {
    return x.master_ == y.master_;
  }

 private:
  std::uint64_t master_;
  FourWiseCoefficients four_wise_;
  PairwiseCoefficients pairwise_;
};

/// Largest valid index for sign4 (indices are field elements).
inline constexpr std::uint64_t kMaxSignIndex = ProductionField::kPrime - 1;

/// 4-wise independent sign in {-1, +1}. Throws DomainError if
/// row_index >= 2^61 - 1.
int sign4(const SketchSeed& seed, std::uint64_t row_index);
int sign4(const FourWiseCoefficients& coeffs, std::uint64_t row_index);

/// Unchecked variant for inner loops whose indices were validated upstream.
inline int sign4_unchecked(const FourWiseCoefficients& coeffs,
                           std::uint64_t row_index) noexcept {
  return sign_of(cubic_hash<ProductionField>(coeffs.c, row_index));
}

/// Pairwise independent bucket in [0, k). Throws ContractError unless k is
/// a power of two.
std::uint64_t bucket2(const SketchSeed& seed, std::uint64_t row_index, std::uint64_t k);
std::uint64_t bucket2(const PairwiseCoefficients& coeffs, std::uint64_t row_index,
                      std::uint64_t k);

bool is_power_of_two(std::uint64_t x) noexcept;
/// floor(log2(x)) for x >= 1.
unsigned log2_floor(std::uint64_t x) noexcept;

}  // namespace sketchreg::hashing
