#include "sketchreg/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "sketchreg/error.hpp"
#include "sketchreg/hashing.hpp"

namespace sketchreg::linalg {

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": matrix has non-finite entries");
  }
}

namespace {

using Decomposition = Eigen::BDCSVD<Eigen::MatrixXd>;

Decomposition decompose(const DenseMatrix& m, bool vectors) {
  unsigned options = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  return Decomposition(Eigen::MatrixXd(m), options);
}

Eigen::Index numerical_rank(const DenseVector& sigma) {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double cut = sigma(0) * kRankTolerance;
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > cut) ++r;
  return r;
}

}  // namespace

SvdFactors svd(const DenseMatrix& m) {
  require_finite(m, "svd");
  SvdFactors out;
  if (m.size() == 0) {
    out.u.resize(m.rows(), 0);
    out.v.resize(m.cols(), 0);
    return out;
  }
  auto dec = decompose(m, true);
  const Eigen::Index r = numerical_rank(dec.singularValues());
  out.sigma = dec.singularValues().head(r);
  out.u = dec.matrixU().leftCols(r);
  out.v = dec.matrixV().leftCols(r);
  return out;
}

DenseVector singular_values(const DenseMatrix& m) {
  require_finite(m, "singular_values");
  if (m.size() == 0) return DenseVector(0);
  return decompose(m, false).singularValues();
}

double spectral_norm(const DenseMatrix& m) {
  DenseVector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(0);
}

double sigma_min(const DenseMatrix& m) {
  DenseVector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

DenseVector ols_solve(const DenseMatrix& x, const DenseVector& y) {
  if (x.rows() != y.size()) {
    throw ContractError("ols_solve: X has " + std::to_string(x.rows()) +
                        " rows but Y has " + std::to_string(y.size()));
  }
  if (x.rows() == 0) return DenseVector::Zero(x.cols());
  SvdFactors f = svd(x);
  if (f.rank() == 0) return DenseVector::Zero(x.cols());
  DenseVector coeff = (f.u.transpose() * y).cwiseQuotient(f.sigma);
  return f.v * coeff;
}

namespace {

const SvdFactors& require_full_rank(const SvdFactors& f, const DenseMatrix& x, const char* what) {
  if (f.rank() < x.cols()) {
    throw NumericalError(std::string(what) + ": matrix is rank deficient (rank " +
                         std::to_string(f.rank()) + " < " + std::to_string(x.cols()) + ")");
  }
  return f;
}

}  // namespace

double trace_inv_gram(const DenseMatrix& x) {
  SvdFactors f = svd(x);
  require_full_rank(f, x, "trace_inv_gram");
  return f.sigma.array().square().inverse().sum();
}

DenseMatrix inv_gram(const DenseMatrix& x) {
  SvdFactors f = svd(x);
  require_full_rank(f, x, "inv_gram");
  DenseMatrix scaled = f.v * f.sigma.array().square().inverse().matrix().asDiagonal();
  DenseMatrix g = scaled * f.v.transpose();
  return 0.5 * (g + g.transpose());
}

double condition_number(const DenseMatrix& x) {
  DenseVector s = singular_values(x);
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  const double floor = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(x.rows(), x.cols())) * s(0);
  if (lo <= floor) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!hashing::is_power_of_two(n)) {
    throw ContractError("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

DenseVector fwht(const DenseVector& v) {
  DenseVector out = v;
  fwht_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

void fwht_columns(DenseMatrix& block) {
  const auto n = static_cast<std::size_t>(block.rows());
  if (!hashing::is_power_of_two(n)) {
    throw ContractError("fwht: block height " + std::to_string(n) + " is not a power of two");
  }
  // Butterflies on whole rows keep the row-major access contiguous.
  const auto width = static_cast<std::size_t>(block.cols());
  double* base = block.data();
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        double* top = base + j * width;
        double* bottom = base + (j + h) * width;
        for (std::size_t q = 0; q < width; ++q) {
          const double a = top[q];
          const double b = bottom[q];
          top[q] = a + b;
          bottom[q] = a - b;
        }
      }
    }
  }
}

int hadamard_entry(std::uint64_t r, std::uint64_t c) noexcept {
  return (std::popcount(r & c) & 1) ? -1 : 1;
}

}  // namespace sketchreg::linalg
