#include "piecy/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>

#include "piecy/errors.hpp"

namespace piecy::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class ScopedProjector {
 public:
  explicit ScopedProjector(RunStats& stats) : stats_(stats) {
    ++stats_.live_projectors;
    stats_.peak_live_projectors = std::max(stats_.peak_live_projectors, stats_.live_projectors);
  }
  ~ScopedProjector() { --stats_.live_projectors; }
  ScopedProjector(const ScopedProjector&) = delete;
  ScopedProjector& operator=(const ScopedProjector&) = delete;

 private:
  RunStats& stats_;
};

}  // namespace

std::size_t default_svd_dim(std::size_t k) { return (3 * k + 1) / 2; }

std::size_t default_coreset_size(std::size_t k) { return 200 * k; }

void validate(const PiecyConfig& cfg) {
  if (cfg.svd_dim == 0 || cfg.piece_size < cfg.svd_dim) {
    throw std::invalid_argument("piecy needs piece_size >= svd_dim >= 1");
  }
  if (cfg.k == 0 || cfg.coreset_size < cfg.k) {
    throw std::invalid_argument("piecy needs coreset_size >= k >= 1");
  }
}

bool read_piece(io::PointSource& source, std::size_t max_rows, linalg::Matrix& points,
                std::vector<std::uint64_t>& weights, RunStats* stats) {
  const auto d = static_cast<Eigen::Index>(source.dim());
  const auto rows = static_cast<Eigen::Index>(max_rows);
  if (points.rows() != rows || points.cols() != d) points.resize(rows, d);
  weights.resize(max_rows);

  const auto start = Clock::now();
  Eigen::Index count = 0;
  while (count < rows) {
    std::span<double> row(points.row(count).data(), static_cast<std::size_t>(d));
    if (!source.next(row, weights[static_cast<std::size_t>(count)])) break;
    ++count;
  }
  if (stats != nullptr) {
    stats->times.ingest += seconds_since(start);
    stats->points_read += static_cast<std::uint64_t>(count);
    for (Eigen::Index i = 0; i < count; ++i) stats->total_weight += weights[static_cast<std::size_t>(i)];
    if (count > 0) ++stats->pieces;
  }
  if (count < rows) {
    points.conservativeResize(count, d);
    weights.resize(static_cast<std::size_t>(count));
  }
  return count > 0;
}

void project_and_insert(coreset::BicoEngine& engine, linalg::Matrix& points,
                        std::span<const std::uint64_t> weights,
                        const linalg::SvdTruncation& truncation, RunStats& stats) {
  if (points.rows() == 0) return;
  if (static_cast<std::size_t>(points.cols()) != engine.dim()) {
    throw DimensionMismatch(engine.dim(), static_cast<std::size_t>(points.cols()));
  }
  const auto rank = static_cast<Eigen::Index>(truncation.target_rank);
  if (rank < points.cols() && rank <= points.rows()) {
    const auto start = Clock::now();
    {
      ScopedProjector alive(stats);
      const linalg::Projector projector = linalg::weighted_best_fit(points, weights, truncation);
      points = linalg::project(points, projector);
    }
    ++stats.svd_calls;
    stats.times.svd += seconds_since(start);
  }

  const auto start = Clock::now();
  const auto d = static_cast<std::size_t>(points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    engine.insert(std::span<const double>(points.row(i).data(), d), weights[static_cast<std::size_t>(i)]);
  }
  stats.times.coreset += seconds_since(start);
}

std::vector<WeightedPoint> bico_run(io::PointSource& source, std::size_t coreset_size,
                                    RunStats* stats) {
  RunStats local;
  RunStats& s = stats != nullptr ? *stats : local;
  const std::size_t d = source.dim();
  if (d == 0) return {};
  coreset::BicoEngine engine(d, coreset_size);

  std::vector<double> row(d);
  std::uint64_t w = 1;
  while (true) {
    const auto read_start = Clock::now();
    const bool ok = source.next(row, w);
    s.times.ingest += seconds_since(read_start);
    if (!ok) break;
    ++s.points_read;
    const auto insert_start = Clock::now();
    engine.insert(row, w);
    s.times.coreset += seconds_since(insert_start);
    s.total_weight += w;
  }
  return engine.extract_coreset();
}

std::vector<WeightedPoint> piecy_run(io::PointSource& source, const PiecyConfig& cfg,
                                     RunStats* stats) {
  validate(cfg);
  RunStats local;
  RunStats& s = stats != nullptr ? *stats : local;
  const std::size_t d = source.dim();
  if (d == 0) return {};
  if (cfg.svd_dim > d) {
    throw std::invalid_argument("svd_dim " + std::to_string(cfg.svd_dim) +
                                " exceeds the point dimension " + std::to_string(d));
  }

  coreset::BicoEngine engine(d, cfg.coreset_size);
  linalg::Matrix piece;
  std::vector<std::uint64_t> weights;
  std::uint64_t index = 0;
  while (read_piece(source, cfg.piece_size, piece, weights, &s)) {
    const linalg::SvdTruncation truncation{cfg.svd_dim, cfg.oversample, cfg.power_iterations,
                                           cfg.seed ^ index};
    project_and_insert(engine, piece, weights, truncation, s);
    ++index;
  }
  return engine.extract_coreset();
}

}  // namespace piecy::pipeline
