#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "piecy/coreset.hpp"
#include "piecy/linalg.hpp"
#include "piecy/rng.hpp"
#include "piecy/stream_io.hpp"

namespace piecy::eval {

/// k centers, one per row.
using CenterSet = linalg::Matrix;

/// Weighted point set held in memory (typically a coreset).
struct WeightedSet {
  linalg::Matrix points;
  std::vector<std::uint64_t> weights;

  static WeightedSet from_coreset(std::span<const coreset::WeightedPoint> coreset);
  std::size_t size() const noexcept { return weights.size(); }
};

/// Index drawn with probability masses[i] / sum(masses); by weight when all
/// masses are zero. `weights` breaks that tie and must be the same length.
std::size_t sample_index(std::span<const double> masses, std::span<const std::uint64_t> weights,
                         SplitMix64& rng);

/// Weighted D^2 seeding: the first center with probability proportional to
/// weight, each further one proportional to weight * squared distance to the
/// nearest chosen center. If all remaining mass is zero (fewer distinct points
/// than k) further centers are drawn by weight alone, repeating points.
/// Throws std::invalid_argument on empty input or k == 0.
CenterSet kmeanspp_seed(const WeightedSet& data, std::size_t k, SplitMix64& rng);

/// Sum over points of weight * squared distance to the nearest center.
double weighted_cost(const WeightedSet& data, const CenterSet& centers);

struct LloydResult {
  CenterSet centers;
  /// costs[0] is the cost of the starting centers, then one entry per iteration.
  std::vector<double> costs;
  std::size_t iterations = 0;
};

/// Weighted Lloyd iterations. Stops when the relative cost decrease drops below
/// `tolerance` or after `max_iterations`. A center that loses all its points is
/// moved onto the point with the largest weighted squared distance to its
/// nearest center.
LloydResult lloyd_iterate(const WeightedSet& data, CenterSet centers,
                          std::size_t max_iterations = 100, double tolerance = 1e-4);

/// Cost of `centers` on the whole stream, read once from its current position.
/// Point weights reported by the stream are honored.
double evaluate_cost(const CenterSet& centers, io::PointSource& stream);

/// evaluate_cost for several center sets in the same single pass.
std::vector<double> evaluate_costs(std::span<const CenterSet> center_sets, io::PointSource& stream);

struct CostSummary {
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
  double median = 0.0;
  std::vector<double> values;

  static CostSummary of(std::vector<double> values);
};

struct EvalOptions {
  std::size_t repetitions = 5;
  std::size_t max_iterations = 100;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct EvalOutcome {
  /// Weighted cost of each repetition's centers on the summary.
  CostSummary coreset_cost;
  /// Cost of the same centers on the original stream, when one was given.
  std::optional<CostSummary> full_cost;
  std::vector<CenterSet> centers;
};

/// k-means++ followed by Lloyd on `data`, `repetitions` times with independent
/// generator streams (seed, repetition). When `full_stream` is set it is rewound
/// and read once to price every repetition's centers on the original data.
EvalOutcome evaluate(const WeightedSet& data, std::size_t k, const EvalOptions& options,
                     io::PointSource* full_stream = nullptr);

}  // namespace piecy::eval
