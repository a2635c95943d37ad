#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "piecy/coreset.hpp"
#include "piecy/pipeline.hpp"

namespace piecy::pipeline {

struct MrConfig {
  std::size_t piece_size = 1;
  std::size_t num_pieces = 2;
  std::size_t svd_dim = 1;
  std::size_t k = 1;
  std::size_t coreset_size = 200;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument unless num_pieces >= 2, piece_size >= svd_dim >= 1
/// and coreset_size >= k >= 1.
void validate(const MrConfig& cfg);

/// SVD seed for a reduction entering `level`; `index` counts pieces on level 0
/// and flushes out of level - 1 otherwise. Level 0 uses seed ^ index.
std::uint64_t tree_svd_seed(std::uint64_t seed, std::size_t level, std::uint64_t index);

struct MrStats {
  RunStats run;
  /// flushes[i]: coresets handed from level i to level i + 1.
  std::vector<std::size_t> flushes;
  /// received[i]: pieces (level 0) or coresets (level > 0) inserted into level i.
  std::vector<std::size_t> received;
  std::size_t live_engines = 0;
  std::size_t peak_live_engines = 0;
};

/// Merge-and-reduce tree of BICO engines with branching factor num_pieces.
///
/// Level 0 receives projected pieces. After num_pieces inputs a level's engine
/// is flushed: its coreset is projected with the weighted best-fit subspace and
/// inserted into the next level, and the engine is discarded. Engines are
/// created lazily, so at most one per level is alive.
class MrTree {
 public:
  MrTree(std::size_t dim, MrConfig cfg);

  /// Throws DimensionMismatch if piece.cols() != dim, std::invalid_argument if
  /// the piece has more than piece_size rows.
  void push_piece(linalg::Matrix piece, std::span<const std::uint64_t> weights = {});

  /// Sends the coreset of `level` one level up (no-op for an empty level).
  void flush(std::size_t level);

  /// Flushes every level that has a live level above it, bottom-up, and returns
  /// the coreset of the topmost engine.
  std::vector<WeightedPoint> finalize();

  const MrStats& stats() const noexcept { return stats_; }
  MrStats& mutable_stats() noexcept { return stats_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t level_count() const noexcept { return levels_.size(); }
  bool level_live(std::size_t level) const;

 private:
  struct Level {
    std::unique_ptr<coreset::BicoEngine> engine;
    std::size_t inputs = 0;
  };

  Level& level_at(std::size_t level);
  coreset::BicoEngine& engine_at(std::size_t level);
  void after_input(std::size_t level);

  std::size_t dim_;
  MrConfig cfg_;
  std::vector<Level> levels_;
  std::uint64_t pieces_pushed_ = 0;
  MrStats stats_;
};

/// One pass over `source` through an MrTree.
std::vector<WeightedPoint> piecy_mr_run(io::PointSource& source, const MrConfig& cfg,
                                        MrStats* stats = nullptr);

}  // namespace piecy::pipeline
