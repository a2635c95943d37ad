#include "piecy/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "piecy/errors.hpp"
#include "piecy/rng.hpp"

namespace piecy::linalg {

namespace {

void require_finite(const Matrix& a) {
  if (!a.allFinite()) {
    throw InvalidInput("matrix contains non-finite entries");
  }
}

void require_rank(const Matrix& a, std::size_t rank) {
  const auto min_dim = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (rank == 0 || rank > min_dim) {
    throw std::invalid_argument("rank " + std::to_string(rank) + " outside [1, " +
                                std::to_string(min_dim) + "]");
  }
}

// Orthonormalizes the columns in order (two passes of modified Gram-Schmidt).
// Columns that collapse are replaced by the standard basis vector with the
// largest component orthogonal to the columns accepted so far.
void orthonormalize_columns(Eigen::MatrixXd& v) {
  const Eigen::Index dim = v.rows();
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::VectorXd col = v.col(j);
    const double original = col.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        col -= v.col(i).dot(col) * v.col(i);
      }
    }
    double norm = col.norm();
    if (!(norm > 0.5 * original) || original == 0.0) {
      double best = -1.0;
      for (Eigen::Index e = 0; e < dim; ++e) {
        Eigen::VectorXd candidate = Eigen::VectorXd::Unit(dim, e);
        for (int pass = 0; pass < 2; ++pass) {
          for (Eigen::Index i = 0; i < j; ++i) {
            candidate -= v.col(i).dot(candidate) * v.col(i);
          }
        }
        const double cn = candidate.norm();
        if (cn > best + 1e-12) {
          best = cn;
          col = candidate;
        }
      }
      norm = col.norm();
    }
    v.col(j) = col / norm;
  }
}

Projector finalize(Eigen::MatrixXd basis, Vector singular_values) {
  const double top = singular_values.size() > 0 ? singular_values(0) : 0.0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (!(singular_values(i) >= kSingularValueCutoff * top) || singular_values(i) <= 0.0) {
      singular_values(i) = 0.0;
    }
  }
  orthonormalize_columns(basis);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double value = basis(i, j);
      if (std::abs(value) > 1e-12) {
        if (value < 0.0) basis.col(j) = -basis.col(j);
        break;
      }
    }
  }
  return Projector(std::move(basis), std::move(singular_values));
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = rng.gaussian();
    }
  }
  return out;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

Projector::Projector(Eigen::MatrixXd basis, Vector singular_values)
    : basis_(std::move(basis)), singular_values_(std::move(singular_values)) {
  if (basis_.cols() != singular_values_.size()) {
    throw std::invalid_argument("projector basis and singular values disagree in rank");
  }
}

Projector exact_truncated_svd(const Matrix& a, std::size_t rank, std::size_t entry_limit) {
  require_rank(a, rank);
  if (static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(a.cols()) > entry_limit) {
    throw std::invalid_argument("matrix too large for the exact SVD backend");
  }
  require_finite(a);

  const auto l = static_cast<Eigen::Index>(rank);
  Eigen::MatrixXd basis(a.cols(), l);
  Vector sigma(l);

  if (a.cols() <= a.rows()) {
    const Eigen::MatrixXd gram = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index n = gram.rows();
    for (Eigen::Index j = 0; j < l; ++j) {
      sigma(j) = std::sqrt(std::max(eig.eigenvalues()(n - 1 - j), 0.0));
      basis.col(j) = eig.eigenvectors().col(n - 1 - j);
    }
  } else {
    // Wide matrix: eigendecompose A A^T and map left vectors back, v = A^T u / sigma.
    const Eigen::MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index n = gram.rows();
    const double top = std::sqrt(std::max(eig.eigenvalues()(n - 1), 0.0));
    for (Eigen::Index j = 0; j < l; ++j) {
      sigma(j) = std::sqrt(std::max(eig.eigenvalues()(n - 1 - j), 0.0));
      if (sigma(j) > kSingularValueCutoff * top && sigma(j) > 0.0) {
        basis.col(j) = a.transpose() * eig.eigenvectors().col(n - 1 - j) / sigma(j);
      } else {
        basis.col(j).setZero();
      }
    }
  }
  return finalize(std::move(basis), std::move(sigma));
}

Projector randomized_truncated_svd(const Matrix& a, const SvdTruncation& truncation) {
  require_rank(a, truncation.target_rank);
  require_finite(a);

  const auto min_dim = std::min(a.rows(), a.cols());
  const auto l = static_cast<Eigen::Index>(truncation.target_rank);
  const Eigen::Index sketch =
      std::min<Eigen::Index>(l + static_cast<Eigen::Index>(truncation.oversample), min_dim);

  SplitMix64 rng(truncation.seed);

  // Row-space sketch: Y = A^T * Omega spans (approximately) the top right singular vectors.
  Eigen::MatrixXd y = a.transpose() * gaussian_matrix(a.rows(), sketch, rng);
  y = orthonormal_basis(y);
  for (std::size_t it = 0; it < truncation.power_iterations; ++it) {
    const Eigen::MatrixXd z = orthonormal_basis(a * y);
    y = orthonormal_basis(a.transpose() * z);
  }

  const Eigen::MatrixXd b = a * y;  // rows x sketch
  Eigen::MatrixXd small_right;
  Vector small_sigma;
  if (a.rows() > 4 * sketch) {
    // Column-side sketch reduces B to a sketch x sketch core.
    const Eigen::MatrixXd z = orthonormal_basis(b * gaussian_matrix(sketch, sketch, rng));
    const Eigen::MatrixXd core = z.transpose() * b;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(core, Eigen::ComputeThinV);
    small_right = svd.matrixV();
    small_sigma = svd.singularValues();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
    small_right = svd.matrixV();
    small_sigma = svd.singularValues();
  }

  Eigen::MatrixXd basis = y * small_right.leftCols(l);
  Vector sigma = small_sigma.head(l);
  return finalize(std::move(basis), std::move(sigma));
}

Matrix project(const Matrix& a, const Projector& projector) {
  if (a.cols() != projector.dim()) {
    throw DimensionMismatch(static_cast<std::size_t>(projector.dim()),
                            static_cast<std::size_t>(a.cols()));
  }
  const Eigen::MatrixXd coords = a * projector.basis();
  return coords * projector.basis().transpose();
}

double reconstruction_error(const Matrix& a, const Projector& projector) {
  return (a - project(a, projector)).squaredNorm();
}

Projector weighted_best_fit(const Matrix& points, std::span<const std::uint64_t> weights,
                            const SvdTruncation& truncation, SvdBackend backend) {
  if (weights.size() != static_cast<std::size_t>(points.rows())) {
    throw DimensionMismatch(static_cast<std::size_t>(points.rows()), weights.size());
  }
  Matrix scaled = points;
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
    const auto w = weights[static_cast<std::size_t>(i)];
    if (w == 0) {
      throw std::invalid_argument("weights must be positive");
    }
    if (w != 1) {
      scaled.row(i) *= std::sqrt(static_cast<double>(w));
    }
  }
  if (backend == SvdBackend::exact) {
    return exact_truncated_svd(scaled, truncation.target_rank);
  }
  return randomized_truncated_svd(scaled, truncation);
}

std::vector<double> spectrum(const Matrix& a, std::size_t count, std::uint64_t seed) {
  const auto min_dim = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (count == 0 || count > min_dim) {
    throw std::invalid_argument("spectrum size " + std::to_string(count) + " outside [1, " +
                                std::to_string(min_dim) + "]");
  }
  const std::size_t entries = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(a.cols());
  Projector p = entries <= kExactEntryLimit
                    ? exact_truncated_svd(a, count)
                    : randomized_truncated_svd(
                          a, SvdTruncation{count, std::min<std::size_t>(10, min_dim - count), 2, seed});
  const Vector& s = p.singular_values();
  return {s.data(), s.data() + s.size()};
}

}  // namespace piecy::linalg
