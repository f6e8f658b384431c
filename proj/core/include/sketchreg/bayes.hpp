#pragma once

// Conjugate Gaussian posteriors over the regression coefficients, on raw or
// sketched data. A Gaussian prior N(m, sigma^2 (S^T S)^{-1}) is folded into
// the likelihood as d extra pseudo-observations:
//
//   Z = [Pi X; S],  z = [Pi Y; S m],  posterior = N(argmin |Z b - z|, sigma^2 (Z^T Z)^{-1})
//
// The prior rows are never sketched.

#include <cstdint>
#include <optional>

#include "sketchreg/linalg.hpp"

namespace sketchreg::bayes {

struct PriorSpec {
  enum class Kind { Uniform, Gaussian };

  Kind kind = Kind::Uniform;
  DenseVector mean;  // Gaussian only
  DenseMatrix s;     // Gaussian only: prior covariance is sigma^2 (S^T S)^{-1}
  /// Noise scale; nullopt means "estimate from the sketch".
  std::optional<double> sigma;

  static PriorSpec uniform(std::optional<double> sigma = std::nullopt);
  /// Throws ContractError on shape mismatch, NumericalError if S is singular.
  static PriorSpec gaussian(DenseVector mean, DenseMatrix s,
                            std::optional<double> sigma = std::nullopt);
  /// Builds S from a prior covariance: S^T S = sigma^2 Sigma^{-1}.
  static PriorSpec gaussian_from_covariance(DenseVector mean, const DenseMatrix& covariance,
                                            double sigma);

  bool is_gaussian() const noexcept { return kind == Kind::Gaussian; }
};

struct GaussianMeasure {
  DenseVector mean;
  DenseMatrix cov;

  Eigen::Index dimension() const noexcept { return mean.size(); }
  DenseVector sd() const;
  /// Throws NumericalError unless cov is symmetric (1e-10 relative) and
  /// positive definite.
  void validate() const;
};

struct AugmentedSystem {
  DenseMatrix design;        // Z
  DenseVector response;      // z
  Eigen::Index prior_rows = 0;
};

/// Z = [sketched_x; S], z = [sketched_y; S m]. A uniform prior passes the
/// sketched system through unchanged.
AugmentedSystem augment(const DenseMatrix& sketched_x, const DenseVector& sketched_y,
                        const PriorSpec& prior);

/// Posterior from an augmented system. Throws NumericalError when Z is
/// rank deficient, ContractError when sigma <= 0.
GaussianMeasure posterior(const AugmentedSystem& system, double sigma);
GaussianMeasure posterior(const DenseMatrix& x, const DenseVector& y, const PriorSpec& prior,
                          double sigma);

/// |Pi X beta - Pi Y|_2 / sqrt(n).
double estimate_sigma(const DenseMatrix& sketched_x, const DenseVector& sketched_y,
                      const DenseVector& beta_hat, std::uint64_t n);

struct SketchFit {
  GaussianMeasure posterior;
  double sigma = 0.0;
  bool sigma_estimated = false;
};

/// Posterior from a finalized sketch [Pi X, Pi Y]. When the prior carries no
/// sigma it is estimated with estimate_sigma at the sketched OLS solution.
SketchFit fit_sketch(const DenseMatrix& sketch, const PriorSpec& prior, std::uint64_t n);

/// Posterior from a GRAM sketch X^T [X, Y] through the normal equations
/// (Cholesky of X^T X + S^T S). sigma must be known: Y^T Y is not retained,
/// so the residual cannot be recovered (ContractError). NumericalError when
/// the precision matrix is not numerically positive definite.
SketchFit fit_gram(const DenseMatrix& gram, const PriorSpec& prior);

}  // namespace sketchreg::bayes
