#pragma once

// Verification layer: certifies that a realized sketch is an
// eps-subspace embedding and evaluates the approximation inequalities for
// least squares and Gaussian posteriors on exact (closed-form) quantities.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sketchreg/bayes.hpp"
#include "sketchreg/hashing.hpp"
#include "sketchreg/linalg.hpp"

namespace sketchreg::metrics {

struct EmbeddingReport {
  double deviation = 0.0;  // |(Pi U)^T (Pi U) - I|_2
  double epsilon_target = 0.0;
  bool pass = false;  // deviation <= epsilon_target
  DenseVector singular_ratios;  // sigma_i^2(Pi M) / sigma_i^2(M)
  bool squared_singular_values_preserved = false;  // ratios in [1 - eps, 1 + eps]
  bool inverse_singular_values_preserved = false;  // 1 / ratios in [1 - 2 eps, 1 + 2 eps]
};

/// `sketched` must be Pi M for the same M. Throws NumericalError if M is
/// rank deficient, ContractError on column mismatch.
EmbeddingReport verify_embedding(const DenseMatrix& m, const DenseMatrix& sketched,
                                 double epsilon);

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double slack = 0.0;  // rhs - lhs
  bool applicable = true;
  std::vector<std::pair<std::string, double>> details;

  std::optional<double> detail(const std::string& key) const;
};

/// lhs <= rhs (1 + 1e-9) + 1e-12.
bool bound_holds(double lhs, double rhs) noexcept;
BoundReport make_bound(std::string name, double lhs, double rhs);

/// Exact W2 distance between Gaussians (Bures form). Covariances must be
/// symmetric positive semidefinite; throws NumericalError otherwise.
double w2_gaussian(const bayes::GaussianMeasure& p, const bayes::GaussianMeasure& q);
/// sqrt(|mean|^2 + trace(cov)): distance to the point mass at the origin.
double wasserstein_weight(const bayes::GaussianMeasure& p);

/// Symmetric PSD square root by eigendecomposition.
DenseMatrix sqrt_psd(const DenseMatrix& a);

/// lhs = |X nu - Y|^2, rhs = (1 + eps) |X gamma - Y|^2. Details carry the
/// (1 + eps^2) strengthening as "strong_rhs" / "strong_satisfied".
BoundReport check_lemma1(const DenseMatrix& x, const DenseVector& y, const DenseVector& nu,
                         double epsilon);

/// lhs = |gamma - nu|^2, rhs = eps^2 / sigma_min^2(X) * |X gamma - Y|^2.
BoundReport check_lemma2(const DenseMatrix& x, const DenseVector& y, const DenseVector& nu,
                         double epsilon);

/// lhs = W2^2(exact, sketched), rhs = eps^2 / sigma_min^2(Z) |Z mu - z|^2
/// + eps^2 trace(cov(exact)), with Z, z the prior-augmented original data.
/// trace(cov(exact)) = sigma^2 trace((Z^T Z)^{-1}).
BoundReport check_theorem1(const DenseMatrix& x, const DenseVector& y,
                           const bayes::PriorSpec& prior, const bayes::GaussianMeasure& sketched,
                           const bayes::GaussianMeasure& exact, double epsilon);

/// Hypothesis |Z mu| >= rho |z|; reports rho* = |Z mu| / |z|. When it holds,
/// lhs = W2(sketched), rhs = (1 + kappa(Z) eps / rho*) W2(exact). Marked
/// not applicable when rho* = 0 or rho* < rho.
BoundReport check_corollary(const bayes::AugmentedSystem& original,
                            const bayes::GaussianMeasure& exact,
                            const bayes::GaussianMeasure& sketched, double epsilon,
                            std::optional<double> rho = std::nullopt);

struct InstabilityReport {
  double kappa_x = 0.0;
  double kappa_gram = 0.0;    // kappa(X^T X), Gram formed explicitly
  double kappa_sketch = 0.0;  // kappa(Pi X) for a RAD sketch
  std::uint64_t sketch_rows = 0;
  double sketch_epsilon = 0.1;
  bool gram_check_applicable = false;  // kappa(X) >= 1e3
  bool gram_squares_condition = false;  // kappa(X^T X) >= kappa(X)^1.9
};

/// `data` is [X, Y]. The RAD sketch uses k = target_dimension(RAD, d_total, eps).
InstabilityReport instability_report(const DenseMatrix& data, hashing::SketchSeed seed,
                                     double epsilon = 0.1);

}  // namespace sketchreg::metrics
