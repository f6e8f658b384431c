#include "sketchreg/bayes.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sketchreg/error.hpp"
#include "sketchreg/sketch.hpp"

namespace sketchreg::bayes {

PriorSpec PriorSpec::uniform(std::optional<double> sigma) {
  PriorSpec p;
  p.kind = Kind::Uniform;
  p.sigma = sigma;
  return p;
}

PriorSpec PriorSpec::gaussian(DenseVector mean, DenseMatrix s, std::optional<double> sigma) {
  if (s.rows() != s.cols() || s.rows() != mean.size()) {
    throw ContractError("gaussian prior: S must be d x d with d = " +
                        std::to_string(mean.size()) + ", got " + std::to_string(s.rows()) +
                        " x " + std::to_string(s.cols()));
  }
  linalg::require_finite(s, "gaussian prior S");
  if (mean.size() > 0 && linalg::svd(s).rank() < s.cols()) {
    throw NumericalError("gaussian prior: S is singular");
  }
  PriorSpec p;
  p.kind = Kind::Gaussian;
  p.mean = std::move(mean);
  p.s = std::move(s);
  p.sigma = sigma;
  return p;
}

PriorSpec PriorSpec::gaussian_from_covariance(DenseVector mean, const DenseMatrix& covariance,
                                              double sigma) {
  if (!(sigma > 0.0)) throw ContractError("gaussian prior: sigma must be positive");
  Eigen::MatrixXd precision = Eigen::MatrixXd(covariance).inverse() * (sigma * sigma);
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (precision + precision.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gaussian prior: covariance is not positive definite");
  }
  DenseMatrix s = llt.matrixU();  // U^T U = precision
  return gaussian(std::move(mean), std::move(s), sigma);
}

DenseVector GaussianMeasure::sd() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

void GaussianMeasure::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ContractError("gaussian measure: covariance shape does not match the mean");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericalError("gaussian measure: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(cov), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().size() > 0 && !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NumericalError("gaussian measure: covariance is not positive definite");
  }
}

AugmentedSystem augment(const DenseMatrix& sketched_x, const DenseVector& sketched_y,
                        const PriorSpec& prior) {
  if (sketched_x.rows() != sketched_y.size()) {
    throw ContractError("augment: sketched X has " + std::to_string(sketched_x.rows()) +
                        " rows but sketched Y has " + std::to_string(sketched_y.size()));
  }
  AugmentedSystem out;
  if (!prior.is_gaussian()) {
    out.design = sketched_x;
    out.response = sketched_y;
    return out;
  }
  const Eigen::Index d = prior.s.cols();
  if (sketched_x.cols() != d) {
    throw ContractError("augment: prior has dimension " + std::to_string(d) +
                        " but data has " + std::to_string(sketched_x.cols()) + " columns");
  }
  const Eigen::Index k = sketched_x.rows();
  out.design.resize(k + d, d);
  out.design.topRows(k) = sketched_x;
  out.design.bottomRows(d) = prior.s;
  out.response.resize(k + d);
  out.response.head(k) = sketched_y;
  out.response.tail(d) = prior.s * prior.mean;
  out.prior_rows = d;
  return out;
}

GaussianMeasure posterior(const AugmentedSystem& system, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ContractError("posterior: sigma must be a positive finite number");
  }
  if (system.design.rows() != system.response.size()) {
    throw ContractError("posterior: design and response disagree in length");
  }
  const Eigen::Index d = system.design.cols();
  linalg::SvdFactors f = linalg::svd(system.design);
  if (f.rank() < d) {
    throw NumericalError("singular posterior: design has rank " + std::to_string(f.rank()) +
                         " < " + std::to_string(d));
  }
  GaussianMeasure out;
  out.mean = f.v * (f.u.transpose() * system.response).cwiseQuotient(f.sigma);
  DenseMatrix scaled = f.v * f.sigma.array().square().inverse().matrix().asDiagonal();
  DenseMatrix cov = (sigma * sigma) * (scaled * f.v.transpose());
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

GaussianMeasure posterior(const DenseMatrix& x, const DenseVector& y, const PriorSpec& prior,
                          double sigma) {
  return posterior(augment(x, y, prior), sigma);
}

double estimate_sigma(const DenseMatrix& sketched_x, const DenseVector& sketched_y,
                      const DenseVector& beta_hat, std::uint64_t n) {
  if (n == 0) throw ContractError("estimate_sigma: original row count n must be >= 1");
  if (sketched_x.cols() != beta_hat.size() || sketched_x.rows() != sketched_y.size()) {
    throw ContractError("estimate_sigma: dimension mismatch");
  }
  return (sketched_x * beta_hat - sketched_y).norm() / std::sqrt(static_cast<double>(n));
}

SketchFit fit_sketch(const DenseMatrix& sketch, const PriorSpec& prior, std::uint64_t n) {
  auto [sx, sy] = split_response(sketch);
  SketchFit fit;
  if (prior.sigma) {
    fit.sigma = *prior.sigma;
  } else {
    const DenseVector nu = linalg::ols_solve(sx, sy);
    fit.sigma = estimate_sigma(sx, sy, nu, n);
    fit.sigma_estimated = true;
    if (!(fit.sigma > 0.0)) {
      throw NumericalError("estimated sigma is zero: the sketch is fitted exactly");
    }
  }
  fit.posterior = posterior(augment(sx, sy, prior), fit.sigma);
  return fit;
}

SketchFit fit_gram(const DenseMatrix& gram, const PriorSpec& prior) {
  if (!prior.sigma) {
    throw ContractError("a GRAM sketch cannot estimate sigma; pass it explicitly");
  }
  if (!(*prior.sigma > 0.0)) throw ContractError("posterior: sigma must be positive");
  auto [xtx, xty] = split_response(gram);
  if (xtx.rows() != xtx.cols()) throw ContractError("GRAM sketch must have d_total - 1 rows");
  linalg::require_finite(gram, "GRAM sketch");
  DenseMatrix precision = xtx;
  DenseVector rhs = xty;
  if (prior.is_gaussian()) {
    if (prior.mean.size() != xtx.cols()) throw ContractError("prior dimension does not match sketch");
    const DenseMatrix sts = prior.s.transpose() * prior.s;
    precision += sts;
    rhs += sts * prior.mean;
  }
  precision = 0.5 * (precision + precision.transpose()).eval();
  Eigen::LLT<DenseMatrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("GRAM normal equations are not positive definite");
  }
  SketchFit fit;
  fit.sigma = *prior.sigma;
  fit.posterior.mean = llt.solve(rhs);
  DenseMatrix cov = llt.solve(DenseMatrix::Identity(xtx.rows(), xtx.cols()));
  cov = fit.sigma * fit.sigma * 0.5 * (cov + cov.transpose()).eval();
  fit.posterior.cov = cov;
  if (!fit.posterior.mean.allFinite() || !fit.posterior.cov.allFinite()) {
    throw NumericalError("GRAM posterior is not finite");
  }
  return fit;
}

}  // namespace sketchreg::bayes
