#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

namespace sketchreg {

/// Row-major dense matrix: rows of [X, Y], sketches, SVD factors.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseVector = Eigen::VectorXd;

}  // namespace sketchreg

namespace sketchreg::linalg {

/// Relative singular value cutoff defining numerical rank.
inline constexpr double kRankTolerance = 1e-12;

/// Thin SVD truncated to numerical rank r:
/// u is rows x r, sigma has r descending entries, v is cols x r.
struct SvdFactors {
  DenseMatrix u;
  DenseVector sigma;
  DenseMatrix v;

  Eigen::Index rank() const noexcept { return sigma.size(); }
};

/// Throws NumericalError on non-finite entries.
SvdFactors svd(const DenseMatrix& m);

/// All min(rows, cols) singular values, descending, without truncation.
DenseVector singular_values(const DenseMatrix& m);

/// Largest singular value; 0 for an empty matrix.
double spectral_norm(const DenseMatrix& m);

/// Smallest of the min(rows, cols) singular values.
double sigma_min(const DenseMatrix& m);

/// Minimum-norm least-squares solution through the SVD pseudoinverse.
DenseVector ols_solve(const DenseMatrix& x, const DenseVector& y);

/// trace((X^T X)^{-1}) = sum_i sigma_i^{-2}. Throws NumericalError when X
/// does not have full column rank.
double trace_inv_gram(const DenseMatrix& x);

/// (X^T X)^{-1} = V diag(sigma^-2) V^T from the SVD of X.
DenseMatrix inv_gram(const DenseMatrix& x);

/// sigma_max / sigma_min over min(rows, cols) singular values; +inf when the
/// smallest is below machine precision (eps * max(rows, cols) * sigma_max).
double condition_number(const DenseMatrix& x);

/// In-place unnormalized Walsh-Hadamard transform; length must be a power
/// of two. Throws ContractError otherwise.
void fwht_inplace(std::span<double> v);
DenseVector fwht(const DenseVector& v);

/// Applies the transform down each column of a (2^p x c) row-major block.
void fwht_columns(DenseMatrix& block);

/// H_m[r, c] = (-1)^popcount(r AND c).
int hadamard_entry(std::uint64_t r, std::uint64_t c) noexcept;

/// Throws NumericalError if any entry is NaN or infinite.
void require_finite(const DenseMatrix& m, const char* what);

}  // namespace sketchreg::linalg
