#include "piecy/piecy_mr.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "piecy/errors.hpp"
#include "piecy/rng.hpp"

namespace piecy::pipeline {

void validate(const MrConfig& cfg) {
  if (cfg.num_pieces < 2) throw std::invalid_argument("piecy-mr needs num_pieces >= 2");
  if (cfg.svd_dim == 0 || cfg.piece_size < cfg.svd_dim) {
    throw std::invalid_argument("piecy-mr needs piece_size >= svd_dim >= 1");
  }
  if (cfg.k == 0 || cfg.coreset_size < cfg.k) {
    throw std::invalid_argument("piecy-mr needs coreset_size >= k >= 1");
  }
}

std::uint64_t tree_svd_seed(std::uint64_t seed, std::size_t level, std::uint64_t index) {
  if (level == 0) return seed ^ index;
  return seed ^ SplitMix64::mix64((static_cast<std::uint64_t>(level) << 32) ^ index);
}

MrTree::MrTree(std::size_t dim, MrConfig cfg) : dim_(dim), cfg_(cfg) {
  validate(cfg_);
  if (dim_ == 0) throw std::invalid_argument("piecy-mr dimension must be positive");
  if (cfg_.svd_dim > dim_) {
    throw std::invalid_argument("svd_dim " + std::to_string(cfg_.svd_dim) +
                                " exceeds the point dimension " + std::to_string(dim_));
  }
}

MrTree::Level& MrTree::level_at(std::size_t level) {
  if (levels_.size() <= level) {
    levels_.resize(level + 1);
    stats_.flushes.resize(level + 1, 0);
    stats_.received.resize(level + 1, 0);
  }
  return levels_[level];
}

coreset::BicoEngine& MrTree::engine_at(std::size_t level) {
  Level& l = level_at(level);
  if (!l.engine) {
    l.engine = std::make_unique<coreset::BicoEngine>(dim_, cfg_.coreset_size);
    ++stats_.live_engines;
    stats_.peak_live_engines = std::max(stats_.peak_live_engines, stats_.live_engines);
  }
  return *l.engine;
}

bool MrTree::level_live(std::size_t level) const {
  return level < levels_.size() && levels_[level].engine != nullptr;
}

void MrTree::push_piece(linalg::Matrix piece, std::span<const std::uint64_t> weights) {
  if (static_cast<std::size_t>(piece.cols()) != dim_) {
    throw DimensionMismatch(dim_, static_cast<std::size_t>(piece.cols()));
  }
  if (static_cast<std::size_t>(piece.rows()) > cfg_.piece_size) {
    throw std::invalid_argument("piece has more than piece_size rows");
  }
  if (piece.rows() == 0) return;
  std::vector<std::uint64_t> unit;
  if (weights.empty()) {
    unit.assign(static_cast<std::size_t>(piece.rows()), 1);
    weights = unit;
  }

  const linalg::SvdTruncation truncation{cfg_.svd_dim, cfg_.oversample, cfg_.power_iterations,
                                         tree_svd_seed(cfg_.seed, 0, pieces_pushed_)};
  ++pieces_pushed_;
  project_and_insert(engine_at(0), piece, weights, truncation, stats_.run);
  after_input(0);
}

void MrTree::after_input(std::size_t level) {
  ++stats_.received[level];
  if (++levels_[level].inputs == cfg_.num_pieces) flush(level);
}

void MrTree::flush(std::size_t level) {
  if (!level_live(level)) return;
  Level& source = levels_[level];
  std::vector<WeightedPoint> summary = source.engine->extract_coreset();
  source.engine.reset();
  source.inputs = 0;
  --stats_.live_engines;
  if (summary.empty()) return;

  const std::uint64_t flush_index = stats_.flushes[level]++;
  linalg::Matrix points(static_cast<Eigen::Index>(summary.size()), static_cast<Eigen::Index>(dim_));
  std::vector<std::uint64_t> weights(summary.size());
  for (std::size_t i = 0; i < summary.size(); ++i) {
    points.row(static_cast<Eigen::Index>(i)) = summary[i].x.transpose();
    weights[i] = summary[i].w;
  }
  summary.clear();

  const linalg::SvdTruncation truncation{cfg_.svd_dim, cfg_.oversample, cfg_.power_iterations,
                                         tree_svd_seed(cfg_.seed, level + 1, flush_index)};
  project_and_insert(engine_at(level + 1), points, weights, truncation, stats_.run);
  after_input(level + 1);
}

std::vector<WeightedPoint> MrTree::finalize() {
  for (std::size_t level = 0; level < levels_.size(); ++level) {
    if (!level_live(level)) continue;
    bool live_above = false;
    for (std::size_t up = level + 1; up < levels_.size(); ++up) {
      live_above = live_above || level_live(up);
    }
    if (live_above) flush(level);
  }
  for (std::size_t level = levels_.size(); level-- > 0;) {
    if (level_live(level)) return levels_[level].engine->extract_coreset();
  }
  return {};
}

std::vector<WeightedPoint> piecy_mr_run(io::PointSource& source, const MrConfig& cfg,
                                        MrStats* stats) {
  validate(cfg);
  const std::size_t d = source.dim();
  if (d == 0) return {};
  MrTree tree(d, cfg);
  linalg::Matrix piece;
  std::vector<std::uint64_t> weights;
  RunStats& run = tree.mutable_stats().run;
  while (read_piece(source, cfg.piece_size, piece, weights, &run)) {
    tree.push_piece(std::move(piece), weights);
  }
  auto result = tree.finalize();
  if (stats != nullptr) *stats = tree.stats();
  return result;
}

}  // namespace piecy::pipeline
