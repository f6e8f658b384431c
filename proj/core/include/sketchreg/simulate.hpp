#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "sketchreg/linalg.hpp"

namespace sketchreg {

/// Synthetic regression data: zero-inflated Poisson coefficients with random
/// signs, Gaussian columns with random means, Gaussian noise.
struct SimConfig {
  std::uint64_t n = 1000;
  std::uint64_t d = 10;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  double zero_inflation = 0.5;  // P(beta_j is an excess zero)
  double poisson_mean = 3.0;
  double col_mean_sd = 5.0;  // column means ~ N(0, 25)
  double x_var = 4.0;        // X_ij ~ N(mu_j, 4)

  /// Throws ContractError on invalid parameters.
  void validate() const;
};

/// Row-at-a-time generator; simulate() is built on it, so streaming and
/// in-memory generation produce identical values.
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg);

  const DenseVector& beta() const noexcept { return beta_; }
  const DenseVector& column_means() const noexcept { return means_; }
  const SimConfig& config() const noexcept { return cfg_; }

  /// Writes x_1..x_d then y into `row` (length d + 1).
  void next_row(std::span<double> row);

 private:
  SimConfig cfg_;
  DenseVector beta_;
  DenseVector means_;
  std::mt19937_64 rows_rng_;
  std::normal_distribution<double> x_noise_;
  std::normal_distribution<double> y_noise_;
};

struct SimData {
  DenseMatrix x;
  DenseVector y;
  DenseVector beta;

  /// [X, Y]
  DenseMatrix joined() const;
};

SimData simulate(const SimConfig& cfg);

}  // namespace sketchreg
