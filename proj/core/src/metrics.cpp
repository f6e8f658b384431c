#include "sketchreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "sketchreg/error.hpp"
#include "sketchreg/sketch.hpp"

namespace sketchreg::metrics {

namespace {

bool within(double v, double lo, double hi) noexcept {
  constexpr double kTol = 1e-12;
  return v >= lo - kTol && v <= hi + kTol;
}

}  // namespace

EmbeddingReport verify_embedding(const DenseMatrix& m, const DenseMatrix& sketched,
                                 double epsilon) {
  if (m.cols() != sketched.cols()) {
    throw ContractError("verify_embedding: M has " + std::to_string(m.cols()) +
                        " columns but the sketch has " + std::to_string(sketched.cols()));
  }
  const linalg::SvdFactors f = linalg::svd(m);
  if (f.rank() < m.cols()) {
    throw NumericalError("verify_embedding: M is rank deficient");
  }
  // Pi U recovered from Pi M = Pi U Sigma V^T.
  const DenseMatrix sketched_u = sketched * f.v * f.sigma.cwiseInverse().asDiagonal();
  Eigen::MatrixXd gram = sketched_u.transpose() * sketched_u;
  gram = 0.5 * (gram + gram.transpose()).eval();
  gram.diagonal().array() -= 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);

  EmbeddingReport out;
  out.epsilon_target = epsilon;
  out.deviation = eig.eigenvalues().cwiseAbs().maxCoeff();
  out.pass = out.deviation <= epsilon;

  const Eigen::Index d = m.cols();
  DenseVector sketched_sigma = DenseVector::Zero(d);
  const DenseVector s = linalg::singular_values(sketched);
  sketched_sigma.head(std::min(d, s.size())) = s.head(std::min(d, s.size()));
  out.singular_ratios = sketched_sigma.array().square() / f.sigma.array().square();

  out.squared_singular_values_preserved = true;
  out.inverse_singular_values_preserved = true;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ratio = out.singular_ratios(i);
    if (!within(ratio, 1.0 - epsilon, 1.0 + epsilon)) out.squared_singular_values_preserved = false;
    const double inverse = ratio > 0.0 ? 1.0 / ratio : std::numeric_limits<double>::infinity();
    if (!within(inverse, 1.0 - 2.0 * epsilon, 1.0 + 2.0 * epsilon)) {
      out.inverse_singular_values_preserved = false;
    }
  }
  return out;
}

std::optional<double> BoundReport::detail(const std::string& key) const {
  for (const auto& [k, v] : details) {
    if (k == key) return v;
  }
  return std::nullopt;
}

bool bound_holds(double lhs, double rhs) noexcept { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }

BoundReport make_bound(std::string name, double lhs, double rhs) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.satisfied = bound_holds(lhs, rhs);
  r.slack = rhs - lhs;
  return r;
}

// --------------------------------------------------------------------------

namespace {

void require_psd(const DenseMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw ContractError(std::string(what) + ": covariance is not square");
  if (a.size() == 0) return;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (!a.allFinite() || (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericalError(std::string(what) + ": covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw NumericalError(std::string(what) + ": covariance is not positive semidefinite");
  }
}

// trace((B^1/2 A B^1/2)^1/2)
double fidelity_trace(const DenseMatrix& a, const DenseMatrix& b_root) {
  DenseMatrix inner = b_root * a * b_root;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(inner), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

DenseMatrix sqrt_psd(const DenseMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Eigen::MatrixXd(a) + Eigen::MatrixXd(a).transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("sqrt_psd: eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  DenseMatrix out = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double w2_gaussian(const bayes::GaussianMeasure& p, const bayes::GaussianMeasure& q) {
  if (p.mean.size() != q.mean.size()) {
    throw ContractError("w2_gaussian: measures live in different dimensions");
  }
  require_psd(p.cov, "w2_gaussian");
  require_psd(q.cov, "w2_gaussian");
  if (p.cov.rows() != p.mean.size() || q.cov.rows() != q.mean.size()) {
    throw ContractError("w2_gaussian: covariance shape does not match the mean");
  }
  const double mean_term = (p.mean - q.mean).squaredNorm();
  // Both orders are evaluated and averaged so the result is exactly symmetric.
  const double cross = 0.5 * (fidelity_trace(p.cov, sqrt_psd(q.cov)) +
                              fidelity_trace(q.cov, sqrt_psd(p.cov)));
  const double cov_term = (p.cov.trace() + q.cov.trace()) - 2.0 * cross;
  return std::sqrt(std::max(0.0, mean_term + std::max(0.0, cov_term)));
}

double wasserstein_weight(const bayes::GaussianMeasure& p) {
  require_psd(p.cov, "wasserstein_weight");
  return std::sqrt(p.mean.squaredNorm() + p.cov.trace());
}

// --------------------------------------------------------------------------

BoundReport check_lemma1(const DenseMatrix& x, const DenseVector& y, const DenseVector& nu,
                         double epsilon) {
  const DenseVector gamma = linalg::ols_solve(x, y);
  const double optimal = (x * gamma - y).squaredNorm();
  const double achieved = (x * nu - y).squaredNorm();
  BoundReport r = make_bound("lemma1", achieved, (1.0 + epsilon) * optimal);
  const double strong = (1.0 + epsilon * epsilon) * optimal;
  r.details = {{"optimal_residual_sq", optimal},
               {"strong_rhs", strong},
               {"strong_satisfied", bound_holds(achieved, strong) ? 1.0 : 0.0}};
  return r;
}

BoundReport check_lemma2(const DenseMatrix& x, const DenseVector& y, const DenseVector& nu,
                         double epsilon) {
  const DenseVector gamma = linalg::ols_solve(x, y);
  const double smin = linalg::sigma_min(x);
  if (!(smin > 0.0)) throw NumericalError("check_lemma2: X is rank deficient");
  const double residual = (x * gamma - y).squaredNorm();
  BoundReport r = make_bound("lemma2", (gamma - nu).squaredNorm(),
                             epsilon * epsilon / (smin * smin) * residual);
  r.details = {{"sigma_min", smin}, {"optimal_residual_sq", residual}};
  return r;
}

BoundReport check_theorem1(const DenseMatrix& x, const DenseVector& y,
                           const bayes::PriorSpec& prior, const bayes::GaussianMeasure& sketched,
                           const bayes::GaussianMeasure& exact, double epsilon) {
  const bayes::AugmentedSystem sys = bayes::augment(x, y, prior);
  const double smin = linalg::sigma_min(sys.design);
  if (!(smin > 0.0)) throw NumericalError("check_theorem1: Z is rank deficient");
  const double residual = (sys.design * exact.mean - sys.response).squaredNorm();
  const double mean_term = epsilon * epsilon / (smin * smin) * residual;
  const double var_term = epsilon * epsilon * exact.cov.trace();
  const double w2 = w2_gaussian(exact, sketched);
  BoundReport r = make_bound("theorem1", w2 * w2, mean_term + var_term);
  r.details = {{"mean_distance_sq", (exact.mean - sketched.mean).squaredNorm()},
               {"mean_term", mean_term},
               {"variance_term", var_term},
               {"sigma_min_z", smin}};
  return r;
}

BoundReport check_corollary(const bayes::AugmentedSystem& original,
                            const bayes::GaussianMeasure& exact,
                            const bayes::GaussianMeasure& sketched, double epsilon,
                            std::optional<double> rho) {
  const double z_norm = original.response.norm();
  const double fitted = (original.design * exact.mean).norm();
  const double rho_star = z_norm > 0.0 ? fitted / z_norm : 0.0;
  const double kappa = linalg::condition_number(original.design);
  const double w_exact = wasserstein_weight(exact);
  const double w_sketched = wasserstein_weight(sketched);

  BoundReport r;
  r.name = "corollary";
  // Relative cutoff: a fitted norm at rounding level means z is orthogonal
  // to the column space.
  const bool hypothesis = rho_star > 1e-12 && (!rho || rho_star >= *rho);
  if (hypothesis) {
    r = make_bound("corollary", w_sketched, (1.0 + kappa * epsilon / rho_star) * w_exact);
  } else {
    r.lhs = w_sketched;
    r.rhs = std::numeric_limits<double>::infinity();
    r.slack = r.rhs;
    r.satisfied = false;
    r.applicable = false;
  }
  r.details = {{"rho_star", rho_star}, {"kappa_z", kappa}, {"w2_exact", w_exact}};
  if (rho) r.details.emplace_back("rho", *rho);
  return r;
}

InstabilityReport instability_report(const DenseMatrix& data, hashing::SketchSeed seed,
                                     double epsilon) {
  if (data.cols() < 2) throw ContractError("instability_report: need [X, Y] with X non-empty");
  const Eigen::Index d = data.cols() - 1;
  const DenseMatrix x = data.leftCols(d);

  InstabilityReport out;
  out.sketch_epsilon = epsilon;
  out.kappa_x = linalg::condition_number(x);
  const DenseMatrix gram = x.transpose() * x;
  out.kappa_gram = linalg::condition_number(gram);

  const auto d_total = static_cast<std::uint64_t>(data.cols());
  out.sketch_rows = target_dimension(SketchMethod::Rad, d_total, epsilon);
  SketchBuilder builder(SketchMethod::Rad, d_total, out.sketch_rows, std::nullopt, seed);
  builder.push_rows(0, data);
  out.kappa_sketch = linalg::condition_number(DenseMatrix(builder.finalize().leftCols(d)));

  out.gram_check_applicable = out.kappa_x >= 1e3;
  out.gram_squares_condition = out.kappa_gram >= std::pow(out.kappa_x, 1.9);
  return out;
}

}  // namespace sketchreg::metrics
