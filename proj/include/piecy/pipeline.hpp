#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "piecy/coreset.hpp"
#include "piecy/linalg.hpp"
#include "piecy/stream_io.hpp"

namespace piecy::pipeline {

using coreset::WeightedPoint;

/// Wall-clock seconds spent per phase.
struct PhaseTimes {
  double ingest = 0.0;
  double svd = 0.0;
  double coreset = 0.0;
};

struct RunStats {
  std::uint64_t points_read = 0;
  std::uint64_t total_weight = 0;
  std::size_t pieces = 0;
  std::size_t svd_calls = 0;
  std::size_t live_projectors = 0;
  std::size_t peak_live_projectors = 0;
  PhaseTimes times;
};

/// ceil(3k / 2): the default projection dimension.
std::size_t default_svd_dim(std::size_t k);
/// 200k: the default coreset size.
std::size_t default_coreset_size(std::size_t k);

struct PiecyConfig {
  std::size_t piece_size = 1;
  std::size_t svd_dim = 1;
  std::size_t k = 1;
  std::size_t coreset_size = 200;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument unless piece_size >= svd_dim >= 1 and coreset_size >= k >= 1.
void validate(const PiecyConfig& cfg);

/// Reads up to `max_rows` points into `points` / `weights` (resized to the
/// number read). Returns false when the stream had nothing left.
bool read_piece(io::PointSource& source, std::size_t max_rows, linalg::Matrix& points,
                std::vector<std::uint64_t>& weights, RunStats* stats);

/// Projects `points` onto their weighted rank-`truncation.target_rank` best-fit
/// subspace (skipped when the rank is >= the dimension or exceeds the number of
/// rows) and inserts them with their weights into `engine`.
void project_and_insert(coreset::BicoEngine& engine, linalg::Matrix& points,
                        std::span<const std::uint64_t> weights,
                        const linalg::SvdTruncation& truncation, RunStats& stats);

/// Plain weighted BICO over the whole stream.
std::vector<WeightedPoint> bico_run(io::PointSource& source, std::size_t coreset_size,
                                    RunStats* stats = nullptr);

/// One pass: each piece of `piece_size` points is projected to its rank-svd_dim
/// best-fit subspace and fed into a single BICO engine. Piece i uses SVD seed
/// `seed ^ i`. Throws std::invalid_argument if svd_dim exceeds the stream dimension.
std::vector<WeightedPoint> piecy_run(io::PointSource& source, const PiecyConfig& cfg,
                                     RunStats* stats = nullptr);

}  // namespace piecy::pipeline
