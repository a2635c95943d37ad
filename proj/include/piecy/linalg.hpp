#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace piecy::linalg {

/// Points are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Parameters of a rank-truncated SVD.
struct SvdTruncation {
  std::size_t target_rank = 1;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
};

enum class SvdBackend { exact, randomized };

/// Largest rows * cols accepted by the exact backend.
inline constexpr std::size_t kExactEntryLimit = 4'000'000;

/// Singular values below this fraction of the largest one are reported as 0.
inline constexpr double kSingularValueCutoff = 1e-12;

/// Rank-l best-fit subspace: the top right singular vectors (as columns of a
/// cols x l matrix) and the matching singular values in nonincreasing order.
///
/// Each basis column is sign-normalized so that its first nonzero entry is
/// positive.
class Projector {
 public:
  Projector(Eigen::MatrixXd basis, Vector singular_values);

  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const Vector& singular_values() const noexcept { return singular_values_; }
  Eigen::Index rank() const noexcept { return basis_.cols(); }
  Eigen::Index dim() const noexcept { return basis_.rows(); }

 private:
  Eigen::MatrixXd basis_;
  Vector singular_values_;
};

/// Exact top-`rank` right singular vectors via the symmetric eigendecomposition
/// of the smaller Gram matrix. Intended for small inputs and as a reference.
///
/// Throws std::invalid_argument if rank is 0 or exceeds min(rows, cols), or if
/// rows * cols exceeds `entry_limit`; InvalidInput for non-finite entries.
Projector exact_truncated_svd(const Matrix& a, std::size_t rank,
                              std::size_t entry_limit = kExactEntryLimit);

/// Randomized range-finder SVD. The row space is sketched with a Gaussian test
/// matrix and refined with `power_iterations` orthonormalized power steps. When
/// rows > 4 * (rank + oversample) the column side is sketched as well, so the
/// final dense SVD is on a (rank + oversample)-square matrix.
///
/// If rank + oversample exceeds min(rows, cols) the oversampling is reduced to
/// fit. Same seed and input give a bit-identical result.
Projector randomized_truncated_svd(const Matrix& a, const SvdTruncation& truncation);

/// A * V * V^T: the rows of `a` projected onto the subspace, in ambient
/// coordinates.
Matrix project(const Matrix& a, const Projector& projector);

/// ||A - project(A)||_F^2.
double reconstruction_error(const Matrix& a, const Projector& projector);

/// Best-fit subspace of the multiset in which row i appears weights[i] times.
/// Computed from the rows scaled by sqrt(weight); the caller projects the
/// original rows with project().
Projector weighted_best_fit(const Matrix& points, std::span<const std::uint64_t> weights,
                            const SvdTruncation& truncation,
                            SvdBackend backend = SvdBackend::randomized);

/// Top `count` singular values, nonincreasing. Uses the exact backend when
/// rows * cols <= kExactEntryLimit, the randomized one otherwise.
std::vector<double> spectrum(const Matrix& a, std::size_t count, std::uint64_t seed = 0);

}  // namespace piecy::linalg
