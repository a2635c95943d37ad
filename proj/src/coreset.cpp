#include "piecy/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstring>
#include <stdexcept>

#include "piecy/errors.hpp"
#include "piecy/rng.hpp"

namespace piecy::coreset {

namespace {

using ConstMap = Eigen::Map<const Eigen::VectorXd>;

ConstMap as_vector(std::span<const double> x) {
  return ConstMap(x.data(), static_cast<Eigen::Index>(x.size()));
}

void require_dim(std::size_t expected, std::size_t actual) {
  if (expected != actual) throw DimensionMismatch(expected, actual);
}

std::uint64_t coordinate_hash(std::span<const double> x) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (double v : x) {
    const double canonical = v == 0.0 ? 0.0 : v;  // -0 and +0 compare equal
    std::uint64_t bits;
    std::memcpy(&bits, &canonical, sizeof(bits));
    h = SplitMix64::mix64(h ^ bits);
  }
  return h;
}

// Features whose references are compared when bootstrapping the threshold.
constexpr std::size_t kBootstrapSample = 2048;

}  // namespace

// ---------------------------------------------------------------------------
// ClusteringFeature

ClusteringFeature::ClusteringFeature(Vector point, std::uint64_t weight)
    : n_(weight),
      reference_(std::move(point)),
      offset_sum_(Vector::Zero(reference_.size())),
      offset_sum_sq_(0.0) {
  if (weight == 0) throw std::invalid_argument("clustering feature weight must be positive");
}

ClusteringFeature ClusteringFeature::from_sums(std::uint64_t n, const Vector& s, double q) {
  if (n == 0) throw std::invalid_argument("clustering feature weight must be positive");
  ClusteringFeature cf;
  cf.n_ = n;
  cf.reference_ = s / static_cast<double>(n);
  cf.offset_sum_ = Vector::Zero(s.size());
  cf.offset_sum_sq_ = q - s.squaredNorm() / static_cast<double>(n);
  return cf;
}

ClusteringFeature ClusteringFeature::from_sums(std::uint64_t n, const Vector& s, double q,
                                               Vector reference) {
  if (n == 0) throw std::invalid_argument("clustering feature weight must be positive");
  require_dim(static_cast<std::size_t>(s.size()), static_cast<std::size_t>(reference.size()));
  ClusteringFeature cf;
  const auto nd = static_cast<double>(n);
  cf.n_ = n;
  cf.offset_sum_ = s - nd * reference;
  cf.offset_sum_sq_ = q - 2.0 * reference.dot(s) + nd * reference.squaredNorm();
  cf.reference_ = std::move(reference);
  return cf;
}

Vector ClusteringFeature::sum() const {
  return offset_sum_ + static_cast<double>(n_) * reference_;
}

double ClusteringFeature::sum_sq() const {
  return offset_sum_sq_ + 2.0 * reference_.dot(offset_sum_) +
         static_cast<double>(n_) * reference_.squaredNorm();
}

Vector ClusteringFeature::centroid() const {
  return reference_ + offset_sum_ / static_cast<double>(n_);
}

double ClusteringFeature::centroid_distance_sq(std::span<const double> x) const {
  require_dim(dim(), x.size());
  return ((as_vector(x) - reference_) - offset_sum_ / static_cast<double>(n_)).squaredNorm();
}

void ClusteringFeature::add_copies(std::span<const double> x, std::uint64_t copies) {
  require_dim(dim(), x.size());
  if (copies == 0) return;
  const Vector delta = as_vector(x) - reference_;
  const auto c = static_cast<double>(copies);
  offset_sum_ += c * delta;
  offset_sum_sq_ += c * delta.squaredNorm();
  n_ += copies;
}

void ClusteringFeature::merge(const ClusteringFeature& other) {
  require_dim(dim(), other.dim());
  const Vector shift = other.reference_ - reference_;
  const auto m = static_cast<double>(other.n_);
  offset_sum_sq_ += other.offset_sum_sq_ + 2.0 * shift.dot(other.offset_sum_) + m * shift.squaredNorm();
  offset_sum_ += other.offset_sum_ + m * shift;
  n_ += other.n_;
}

double cf_cost_to_center(const ClusteringFeature& cf, std::span<const double> center) {
  require_dim(cf.dim(), center.size());
  const Vector delta = as_vector(center) - cf.reference();
  const double cost = cf.offset_sum_sq() - 2.0 * delta.dot(cf.offset_sum()) +
                      static_cast<double>(cf.weight()) * delta.squaredNorm();
  return std::max(cost, 0.0);
}

double cf_internal_error(const ClusteringFeature& cf) {
  const double error =
      cf.offset_sum_sq() - cf.offset_sum().squaredNorm() / static_cast<double>(cf.weight());
  return std::max(error, 0.0);
}

double insertion_error_increment(std::uint64_t s_weight, std::uint64_t w, double dist_sq) {
  const auto s = static_cast<double>(s_weight);
  const auto c = static_cast<double>(w);
  return s * c / (s + c) * dist_sq;
}

std::uint64_t max_insertable_copies(std::uint64_t s_weight, std::uint64_t w, double error,
                                    double threshold, double dist_sq) {
  if (w == 0) return 0;
  const auto s = static_cast<double>(s_weight);
  const double denominator = s * dist_sq - threshold + error;
  if (denominator <= 0.0) return w;
  const double bound = (s * threshold - s * error) / denominator;
  if (!(bound > 0.0)) return 0;

  std::uint64_t copies = bound >= static_cast<double>(w) ? w : static_cast<std::uint64_t>(bound);
  // The floor of the quotient can be off by one in floating point; settle it on
  // the increment itself.
  while (copies < w && error + insertion_error_increment(s_weight, copies + 1, dist_sq) <= threshold) {
    ++copies;
  }
  while (copies > 0 && error + insertion_error_increment(s_weight, copies, dist_sq) > threshold) {
    --copies;
  }
  return copies;
}

// ---------------------------------------------------------------------------
// BicoEngine

BicoEngine::BicoEngine(std::size_t dim, std::size_t budget) : dim_(dim), budget_(budget) {
  if (dim == 0) throw std::invalid_argument("BICO dimension must be positive");
  if (budget == 0) throw std::invalid_argument("BICO feature budget must be positive");
}

double BicoEngine::radius_sq(std::size_t level) const noexcept {
  // R_1^2 = T / 16, and every level halves the radius.
  return std::ldexp(threshold_, -4 - 2 * static_cast<int>(std::min<std::size_t>(level - 1, 600)));
}

const std::vector<std::size_t>& BicoEngine::list_of(std::size_t parent) const {
  return parent == kNoParent ? roots_ : nodes_[parent].children;
}

std::vector<std::size_t>& BicoEngine::list_of(std::size_t parent) {
  return parent == kNoParent ? roots_ : nodes_[parent].children;
}

void BicoEngine::insert(std::span<const double> x, std::uint64_t weight) {
  require_dim(dim_, x.size());
  if (weight == 0) throw std::invalid_argument("point weight must be positive");
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput("point has non-finite coordinates");
  }
  total_weight_ += weight;
  std::uint64_t remaining = weight;
  while (remaining > 0) {
    remaining = place(x, remaining);
  }
}

std::uint64_t BicoEngine::place(std::span<const double> x, std::uint64_t copies) {
  const ConstMap point = as_vector(x);
  std::size_t parent = kNoParent;
  std::size_t level = 1;
  while (true) {
    std::size_t nearest = kNoParent;
    double nearest_dist = std::numeric_limits<double>::infinity();
    if (threshold_ == 0.0) {
      nearest = find_identical_root(x);
      if (nearest != kNoParent) nearest_dist = 0.0;
    } else {
      for (std::size_t idx : list_of(parent)) {
        const double d = (point - nodes_[idx].cf.reference()).squaredNorm();
        if (d < nearest_dist) {
          nearest_dist = d;
          nearest = idx;
        }
      }
    }

    if (nearest == kNoParent || nearest_dist > radius_sq(level)) {
      // Open a feature. If that overflows the budget, replay what single
      // copies would do: open with one copy, rebuild, continue with the rest.
      const bool overflow = nodes_.size() + 1 > budget_;
      const std::uint64_t opened = overflow ? 1 : copies;
      nodes_.push_back(Node{ClusteringFeature(Vector(point), opened), {}});
      list_of(parent).push_back(nodes_.size() - 1);
      if (threshold_ == 0.0) identical_roots_.emplace(coordinate_hash(x), nodes_.size() - 1);
      if (overflow) {
        rebuild();
      }
      return copies - opened;
    }

    Node& node = nodes_[nearest];
    const std::uint64_t taken =
        max_insertable_copies(node.cf.weight(), copies, cf_internal_error(node.cf), threshold_,
                              node.cf.centroid_distance_sq(x));
    node.cf.add_copies(x, taken);
    copies -= taken;
    if (copies == 0) return 0;
    parent = nearest;
    ++level;
  }
}

std::size_t BicoEngine::find_identical_root(std::span<const double> x) const {
  std::size_t found = kNoParent;
  const auto [first, last] = identical_roots_.equal_range(coordinate_hash(x));
  for (auto it = first; it != last; ++it) {
    const auto& ref = nodes_[it->second].cf.reference();
    if (std::equal(x.begin(), x.end(), ref.data())) found = std::min(found, it->second);
  }
  return found;
}

double BicoEngine::bootstrap_threshold() const {
  const std::size_t sample = std::min(nodes_.size(), kBootstrapSample);
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample; ++i) {
    for (std::size_t j = i + 1; j < sample; ++j) {
      const double d = (nodes_[i].cf.reference() - nodes_[j].cf.reference()).squaredNorm();
      if (d > 0.0) min_dist = std::min(min_dist, d);
    }
  }
  if (!std::isfinite(min_dist)) return 1.0;
  return min_dist * static_cast<double>(budget_) / 16.0;
}

void BicoEngine::rebuild() {
  if (nodes_.empty()) return;
  do {
    threshold_ = threshold_ > 0.0 ? 2.0 * threshold_ : bootstrap_threshold();
    ++rebuilds_;
    reinsert_all();
  } while (nodes_.size() > budget_);
}

void BicoEngine::reinsert_all() {
  std::vector<std::size_t> order(nodes_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    return nodes_[a].cf.weight() > nodes_[b].cf.weight();
  });

  std::vector<Node> old = std::move(nodes_);
  nodes_.clear();
  roots_.clear();
  identical_roots_.clear();
  nodes_.reserve(old.size());
  const double root_radius = radius_sq(1);

  for (std::size_t idx : order) {
    ClusteringFeature& cf = old[idx].cf;
    std::size_t nearest = kNoParent;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (std::size_t root : roots_) {
      const double d = (cf.reference() - nodes_[root].cf.reference()).squaredNorm();
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = root;
      }
    }
    if (nearest != kNoParent && nearest_dist <= root_radius) {
      ClusteringFeature merged = nodes_[nearest].cf;
      merged.merge(cf);
      if (cf_internal_error(merged) <= threshold_) {
        nodes_[nearest].cf = std::move(merged);
        continue;
      }
    }
    nodes_.push_back(Node{std::move(cf), {}});
    roots_.push_back(nodes_.size() - 1);
  }
}

std::vector<WeightedPoint> BicoEngine::extract_coreset() const {
  std::vector<WeightedPoint> out;
  out.reserve(nodes_.size());
  for (const Node& node : nodes_) {
    out.push_back(WeightedPoint{node.cf.centroid(), node.cf.weight()});
  }
  return out;
}

std::vector<ClusteringFeature> BicoEngine::features() const {
  std::vector<ClusteringFeature> out;
  out.reserve(nodes_.size());
  for (const Node& node : nodes_) out.push_back(node.cf);
  return out;
}

}  // namespace piecy::coreset
