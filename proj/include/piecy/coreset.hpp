#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "piecy/linalg.hpp"

namespace piecy::coreset {

using linalg::Vector;

/// A coreset atom: a location and a positive integral weight.
struct WeightedPoint {
  Vector x;
  std::uint64_t w = 1;
};

/// Clustering feature of a weighted multiset: total weight n, weighted sum s,
/// weighted sum of squared norms q, and a reference point r.
///
/// Sums are kept relative to r, so that copies of r contribute exact zeros and
/// the internal error does not suffer from cancellation when the data is far
/// from the origin. sum() and sum_sq() return the absolute quantities.
class ClusteringFeature {
 public:
  /// `weight` copies of `point`, which also becomes the reference point.
  ClusteringFeature(Vector point, std::uint64_t weight);

  /// From absolute sums. The reference point defaults to the centroid s / n.
  static ClusteringFeature from_sums(std::uint64_t n, const Vector& s, double q);
  static ClusteringFeature from_sums(std::uint64_t n, const Vector& s, double q, Vector reference);

  std::uint64_t weight() const noexcept { return n_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(reference_.size()); }
  const Vector& reference() const noexcept { return reference_; }

  Vector sum() const;
  double sum_sq() const;
  Vector centroid() const;

  /// ||x - centroid||^2.
  double centroid_distance_sq(std::span<const double> x) const;

  void add_copies(std::span<const double> x, std::uint64_t copies);

  /// Adds n, s and q of `other`; keeps this feature's reference point.
  void merge(const ClusteringFeature& other);

  // Sums relative to the reference point.
  const Vector& offset_sum() const noexcept { return offset_sum_; }
  double offset_sum_sq() const noexcept { return offset_sum_sq_; }

 private:
  ClusteringFeature() = default;

  std::uint64_t n_ = 0;
  Vector reference_;
  Vector offset_sum_;
  double offset_sum_sq_ = 0.0;
};

/// Weighted SSE of the represented multiset to center c:
/// q - 2<c, s> + n ||c||^2. Throws DimensionMismatch.
double cf_cost_to_center(const ClusteringFeature& cf, std::span<const double> center);

/// q - ||s||^2 / n, clamped at 0.
double cf_internal_error(const ClusteringFeature& cf);

/// SSE increase from adding `w` copies of a point at squared distance
/// `dist_sq` from the centroid of a feature of weight `s_weight`:
/// s * w / (s + w) * dist_sq.
double insertion_error_increment(std::uint64_t s_weight, std::uint64_t w, double dist_sq);

/// Largest w' <= w such that error + insertion_error_increment(s, w', dist_sq) <= threshold.
/// Returns w when s * dist_sq - threshold + error <= 0.
std::uint64_t max_insertable_copies(std::uint64_t s_weight, std::uint64_t w, double error,
                                    double threshold, double dist_sq);

/// Streaming weighted BICO.
///
/// Features form a tree. A point descends from the root list: at level i the
/// nearest reference point (ties to the oldest feature) is a candidate if it lies
/// within radius R_i = R_1 / 2^(i-1), R_1^2 = T / 16. As many copies as the
/// threshold T allows are absorbed by the candidate; the rest descend into its
/// children. A point with no candidate opens a new feature in the current list.
///
/// When the feature count exceeds the budget, the engine rebuilds: T is doubled
/// (or bootstrapped on the first rebuild) and all features are reinserted into a
/// flat root list, heaviest first, merging those that fit under the new
/// threshold. Inserting (x, w) leaves the engine in exactly the state produced
/// by w consecutive unit-weight inserts of x.
class BicoEngine {
 public:
  /// Throws std::invalid_argument for dim == 0 or budget == 0.
  BicoEngine(std::size_t dim, std::size_t budget);

  /// Throws DimensionMismatch, InvalidInput for non-finite coordinates and
  /// std::invalid_argument for weight 0.
  void insert(std::span<const double> x, std::uint64_t weight = 1);
  void insert(const WeightedPoint& p) { insert(std::span<const double>(p.x.data(), p.x.size()), p.w); }

  /// Doubles the threshold and reinserts all features until at most `budget`
  /// remain. Called automatically on overflow.
  void rebuild();

  /// One weighted point per feature: centroid s / n with weight n.
  std::vector<WeightedPoint> extract_coreset() const;

  /// Snapshot of every feature, in creation order.
  std::vector<ClusteringFeature> features() const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t budget() const noexcept { return budget_; }
  std::size_t feature_count() const noexcept { return nodes_.size(); }
  std::uint64_t total_weight() const noexcept { return total_weight_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t rebuild_count() const noexcept { return rebuilds_; }
  bool empty() const noexcept { return nodes_.empty(); }

  /// Squared radius used for nearest-reference candidates at `level` (1-based).
  double radius_sq(std::size_t level) const noexcept;

 private:
  static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

  struct Node {
    ClusteringFeature cf;
    std::vector<std::size_t> children;
  };

  // Inserts up to `copies` copies of x. Returns the number of copies that still
  // have to be inserted (nonzero only when opening a feature forced a rebuild).
  std::uint64_t place(std::span<const double> x, std::uint64_t copies);
  const std::vector<std::size_t>& list_of(std::size_t parent) const;
  std::vector<std::size_t>& list_of(std::size_t parent);
  double bootstrap_threshold() const;
  void reinsert_all();
  // While T == 0 only identical points share a feature, so the nearest-root
  // scan reduces to an exact lookup keyed by the coordinates.
  std::size_t find_identical_root(std::span<const double> x) const;

  std::size_t dim_;
  std::size_t budget_;
  double threshold_ = 0.0;
  std::uint64_t total_weight_ = 0;
  std::size_t rebuilds_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> roots_;
  std::unordered_multimap<std::uint64_t, std::size_t> identical_roots_;
};

}  // namespace piecy::coreset
