#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "sketchreg/data.hpp"
#include "sketchreg/sketch.hpp"

namespace sketchreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitContract = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

/// Entry point of the `sketchreg` binary.
int run(int argc, const char* const* argv);

/// 2 for ContractError (and CLI usage errors), 3 for IoError, 4 for
/// NumericalError, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

/// Parallel builder cap from SKETCHREG_THREADS; 1 when unset.
unsigned thread_cap();

struct SketchJob {
  SketchMethod method = SketchMethod::Cw;
  std::uint64_t d_total = 0;
  std::uint64_t k = 0;
  std::optional<std::uint64_t> n_hint;
  hashing::SketchSeed seed{0};
  BuilderOptions options;
  /// Global index of the first streamed row, for sketching one partition.
  std::uint64_t row_offset = 0;
};

struct StreamTimings {
  double read_ms = 0.0;
  double sketch_ms = 0.0;
};

/// Rows per block handed to a builder. Block b goes to builder b mod threads
/// and builders are merged in index order, so the result depends only on the
/// thread count, never on scheduling.
inline constexpr std::size_t kStreamBlockRows = 4096;

SketchBuilder sketch_rows(RowStream& rows, const SketchJob& job, unsigned threads,
                          StreamTimings& timings);

/// k from --epsilon or --k. RAD and SRHT size on d_total; CW sizes on the
/// variable count d_total - 1 - (intercept ? 1 : 0). GRAM returns d_total - 1.
std::uint64_t resolve_k(SketchMethod method, std::uint64_t d_total, bool intercept,
                        std::optional<double> epsilon, std::optional<std::uint64_t> k,
                        double alpha, bool alpha_strict);

/// Best-of-`repeats` wall time in milliseconds for sketching `data` in memory.
double time_sketch_ms(const SketchJob& job, const DenseMatrix& data, int repeats);

}  // namespace sketchreg::cli
