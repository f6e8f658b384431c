#include "sketchreg/simulate.hpp"

#include <cmath>
#include <string>

#include "sketchreg/error.hpp"
#include "sketchreg/hashing.hpp"

namespace sketchreg {

void SimConfig::validate() const {
  if (n == 0 || d == 0) throw ContractError("simulate: n and d must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ContractError("simulate: sigma must be positive");
  if (!(zero_inflation >= 0.0 && zero_inflation <= 1.0)) {
    throw ContractError("simulate: zero_inflation must lie in [0, 1]");
  }
  if (!(poisson_mean > 0.0) || !(col_mean_sd > 0.0) || !(x_var > 0.0)) {
    throw ContractError("simulate: poisson_mean, col_mean_sd and x_var must be positive");
  }
}

namespace {

// Coefficients and rows come from separate generators so that the row
// sequence does not depend on how many draws d coefficients consumed.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
  return std::mt19937_64(hashing::splitmix64(state));
}

}  // namespace

Simulator::Simulator(const SimConfig& cfg)
    : cfg_(cfg),
      rows_rng_(stream_rng(cfg.seed, 1)),
      x_noise_(0.0, std::sqrt(cfg.x_var)),
      y_noise_(0.0, cfg.sigma) {
  cfg_.validate();
  std::mt19937_64 coef = stream_rng(cfg.seed, 0);
  std::bernoulli_distribution excess_zero(cfg.zero_inflation);
  std::poisson_distribution<long long> count(cfg.poisson_mean);
  std::bernoulli_distribution flip(0.5);
  std::normal_distribution<double> mean(0.0, cfg.col_mean_sd);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  beta_.resize(d);
  means_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    // All three draws happen for every j to keep the stream layout fixed.
    const bool zero = excess_zero(coef);
    const double magnitude = static_cast<double>(count(coef));
    const double sign = flip(coef) ? -1.0 : 1.0;
    beta_[j] = zero ? 0.0 : sign * magnitude;
  }
  for (Eigen::Index j = 0; j < d; ++j) means_[j] = mean(coef);
}

void Simulator::next_row(std::span<double> row) {
  if (row.size() != cfg_.d + 1) throw ContractError("simulate: row buffer must hold d + 1 values");
  double y = 0.0;
  for (std::size_t j = 0; j < cfg_.d; ++j) {
    const double x = means_[static_cast<Eigen::Index>(j)] + x_noise_(rows_rng_);
    row[j] = x;
    y += x * beta_[static_cast<Eigen::Index>(j)];
  }
  row[cfg_.d] = y + y_noise_(rows_rng_);
}

DenseMatrix SimData::joined() const {
  DenseMatrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()) = y;
  return out;
}

SimData simulate(const SimConfig& cfg) {
  Simulator sim(cfg);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  SimData out;
  out.x.resize(n, d);
  out.y.resize(n);
  out.beta = sim.beta();
  std::vector<double> row(cfg.d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    sim.next_row(row);
    for (Eigen::Index j = 0; j < d; ++j) out.x(i, j) = row[static_cast<std::size_t>(j)];
    out.y[i] = row[cfg.d];
  }
  return out;
}

}  // namespace sketchreg
