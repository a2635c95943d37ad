#include "piecy/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "piecy/errors.hpp"

namespace piecy::eval {

namespace {

struct Assignment {
  std::vector<std::size_t> center;
  std::vector<double> dist_sq;
  double cost = 0.0;
};

std::size_t nearest_center(const CenterSet& centers, const Eigen::Ref<const Eigen::RowVectorXd>& p,
                           double& best) {
  std::size_t arg = 0;
  best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (p - centers.row(c)).squaredNorm();
    if (d < best) {
      best = d;
      arg = static_cast<std::size_t>(c);
    }
  }
  return arg;
}

Assignment assign(const WeightedSet& data, const CenterSet& centers) {
  Assignment a;
  const std::size_t n = data.size();
  a.center.resize(n);
  a.dist_sq.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.center[i] = nearest_center(centers, data.points.row(static_cast<Eigen::Index>(i)), a.dist_sq[i]);
    a.cost += static_cast<double>(data.weights[i]) * a.dist_sq[i];
  }
  return a;
}

void require_data(const WeightedSet& data) {
  if (data.size() == 0) throw std::invalid_argument("k-means needs at least one point");
  if (data.weights.size() != static_cast<std::size_t>(data.points.rows())) {
    throw DimensionMismatch(static_cast<std::size_t>(data.points.rows()), data.weights.size());
  }
}

}  // namespace

WeightedSet WeightedSet::from_coreset(std::span<const coreset::WeightedPoint> coreset) {
  WeightedSet out;
  const Eigen::Index d = coreset.empty() ? 0 : coreset.front().x.size();
  out.points.resize(static_cast<Eigen::Index>(coreset.size()), d);
  out.weights.reserve(coreset.size());
  for (std::size_t i = 0; i < coreset.size(); ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) = coreset[i].x.transpose();
    out.weights.push_back(coreset[i].w);
  }
  return out;
}

std::size_t sample_index(std::span<const double> masses, std::span<const std::uint64_t> weights,
                         SplitMix64& rng) {
  if (masses.empty() || masses.size() != weights.size()) {
    throw std::invalid_argument("sample_index needs equally sized, nonempty masses and weights");
  }
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  const bool by_weight = !(total > 0.0);
  auto mass = [&](std::size_t i) {
    return by_weight ? static_cast<double>(weights[i]) : masses[i];
  };
  if (by_weight) {
    total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) total += mass(i);
  }
  const double target = rng.uniform() * total;
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const double m = mass(i);
    if (m <= 0.0) continue;
    last_positive = i;
    running += m;
    if (target < running) return i;
  }
  return last_positive;
}

CenterSet kmeanspp_seed(const WeightedSet& data, std::size_t k, SplitMix64& rng) {
  require_data(data);
  if (k == 0) throw std::invalid_argument("k must be positive");
  const std::size_t n = data.size();
  CenterSet centers(static_cast<Eigen::Index>(k), data.points.cols());

  std::vector<double> masses(n, 0.0);
  std::size_t chosen = sample_index(masses, data.weights, rng);
  centers.row(0) = data.points.row(static_cast<Eigen::Index>(chosen));

  std::vector<double> dist_sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist_sq[i] = (data.points.row(static_cast<Eigen::Index>(i)) - centers.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) masses[i] = static_cast<double>(data.weights[i]) * dist_sq[i];
    chosen = sample_index(masses, data.weights, rng);
    const auto row = static_cast<Eigen::Index>(c);
    centers.row(row) = data.points.row(static_cast<Eigen::Index>(chosen));
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (data.points.row(static_cast<Eigen::Index>(i)) - centers.row(row)).squaredNorm();
      dist_sq[i] = std::min(dist_sq[i], d);
    }
  }
  return centers;
}

double weighted_cost(const WeightedSet& data, const CenterSet& centers) {
  if (data.size() == 0) return 0.0;
  return assign(data, centers).cost;
}

LloydResult lloyd_iterate(const WeightedSet& data, CenterSet centers, std::size_t max_iterations,
                          double tolerance) {
  require_data(data);
  if (centers.rows() == 0) throw std::invalid_argument("Lloyd needs at least one center");
  if (centers.cols() != data.points.cols()) {
    throw DimensionMismatch(static_cast<std::size_t>(data.points.cols()),
                            static_cast<std::size_t>(centers.cols()));
  }
  const std::size_t n = data.size();
  const auto k = static_cast<std::size_t>(centers.rows());

  LloydResult result;
  Assignment current = assign(data, centers);
  result.costs.push_back(current.cost);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    CenterSet updated = CenterSet::Zero(centers.rows(), centers.cols());
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = static_cast<double>(data.weights[i]);
      updated.row(static_cast<Eigen::Index>(current.center[i])) +=
          w * data.points.row(static_cast<Eigen::Index>(i));
      mass[current.center[i]] += w;
    }
    std::vector<double> contribution(n);
    for (std::size_t i = 0; i < n; ++i) {
      contribution[i] = static_cast<double>(data.weights[i]) * current.dist_sq[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      if (mass[c] > 0.0) {
        updated.row(row) /= mass[c];
        continue;
      }
      // Empty cluster: move onto the point that currently pays the most.
      const auto worst = static_cast<std::size_t>(
          std::max_element(contribution.begin(), contribution.end()) - contribution.begin());
      updated.row(row) = data.points.row(static_cast<Eigen::Index>(worst));
      contribution[worst] = 0.0;
    }

    Assignment next = assign(data, updated);
    ++result.iterations;
    if (next.cost > current.cost) {
      // Only rounding can raise the cost here; keep the previous centers.
      result.costs.push_back(current.cost);
      break;
    }
    const double decrease = current.cost - next.cost;
    const double before = current.cost;
    centers = std::move(updated);
    current = std::move(next);
    result.costs.push_back(current.cost);
    if (!(decrease >= tolerance * before) || current.cost == 0.0) break;
  }
  result.centers = std::move(centers);
  return result;
}

std::vector<double> evaluate_costs(std::span<const CenterSet> center_sets, io::PointSource& stream) {
  std::vector<double> costs(center_sets.size(), 0.0);
  const std::size_t d = stream.dim();
  if (d == 0) return costs;
  for (const CenterSet& centers : center_sets) {
    if (static_cast<std::size_t>(centers.cols()) != d) {
      throw DimensionMismatch(d, static_cast<std::size_t>(centers.cols()));
    }
  }
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(d));
  std::uint64_t w = 1;
  while (stream.next(std::span<double>(row.data(), d), w)) {
    for (std::size_t s = 0; s < center_sets.size(); ++s) {
      double best = 0.0;
      nearest_center(center_sets[s], row, best);
      costs[s] += static_cast<double>(w) * best;
    }
  }
  return costs;
}

double evaluate_cost(const CenterSet& centers, io::PointSource& stream) {
  return evaluate_costs(std::span<const CenterSet>(&centers, 1), stream).front();
}

CostSummary CostSummary::of(std::vector<double> values) {
  CostSummary s;
  s.values = values;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.min = values.front();
  s.max = values.back();
  s.avg = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

EvalOutcome evaluate(const WeightedSet& data, std::size_t k, const EvalOptions& options,
                     io::PointSource* full_stream) {
  require_data(data);
  if (options.repetitions == 0) throw std::invalid_argument("need at least one repetition");
  EvalOutcome out;
  std::vector<double> coreset_costs;
  for (std::size_t r = 0; r < options.repetitions; ++r) {
    SplitMix64 rng(options.seed, r);
    LloydResult fit = lloyd_iterate(data, kmeanspp_seed(data, k, rng), options.max_iterations,
                                    options.tolerance);
    coreset_costs.push_back(fit.costs.back());
    out.centers.push_back(std::move(fit.centers));
  }
  out.coreset_cost = CostSummary::of(std::move(coreset_costs));
  if (full_stream != nullptr) {
    full_stream->rewind();
    out.full_cost = CostSummary::of(evaluate_costs(out.centers, *full_stream));
  }
  return out;
}

}  // namespace piecy::eval
