#include "piecy/datagen.hpp"

#include <numeric>
#include <stdexcept>

#include "piecy/errors.hpp"

namespace piecy::datagen {

void validate(const SwnConfig& cfg) {
  if (cfg.clusters == 0 || cfg.points_per_cluster == 0 || cfg.dim == 0) {
    throw std::invalid_argument("StructuredWithNoise needs clusters, points and dim >= 1");
  }
  if (cfg.active_dims > cfg.dim) {
    throw std::invalid_argument("active dimensions exceed the ambient dimension");
  }
  if (!(cfg.noise > 0.0) || !(cfg.spread > cfg.noise)) {
    throw std::invalid_argument("StructuredWithNoise needs spread > noise > 0");
  }
}

void validate(const LowerBoundConfig& cfg) {
  if (cfg.k < 2) throw std::invalid_argument("LowerBound needs k >= 2");
  if (cfg.n == 0 || cfg.n % cfg.k != 0) {
    throw std::invalid_argument("LowerBound needs n to be a positive multiple of k");
  }
  if (!(cfg.spread > 0.0) || !(cfg.noise > 0.0)) {
    throw std::invalid_argument("LowerBound needs positive simplex scales");
  }
}

void validate(const RandomConfig& cfg) {
  if (cfg.n == 0) throw std::invalid_argument("Random needs n >= 1");
  if (!(cfg.spread > 0.0)) throw std::invalid_argument("Random needs a positive range");
}

// ---------------------------------------------------------------------------

StructuredWithNoiseSource::StructuredWithNoiseSource(SwnConfig cfg)
    : cfg_(cfg), active_(cfg.dim, false), permutation_(cfg.dim), coords_rng_(cfg.seed, 0) {
  validate(cfg_);
  rewind();
}

void StructuredWithNoiseSource::rewind() {
  cluster_ = 0;
  in_cluster_ = 0;
}

void StructuredWithNoiseSource::start_cluster() {
  // Stream 2i picks the active dimensions of cluster i, stream 2i+1 its coordinates.
  SplitMix64 dims_rng(cfg_.seed, 2 * cluster_);
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  for (std::size_t i = cfg_.dim; i > 1; --i) {
    const auto j = static_cast<std::size_t>(dims_rng.below(i));
    std::swap(permutation_[i - 1], permutation_[j]);
  }
  std::fill(active_.begin(), active_.end(), false);
  for (std::size_t i = 0; i < cfg_.active_dims; ++i) active_[permutation_[i]] = true;
  coords_rng_ = SplitMix64(cfg_.seed, 2 * cluster_ + 1);
}

bool StructuredWithNoiseSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (cluster_ >= cfg_.clusters) return false;
  if (coords.size() != cfg_.dim) throw DimensionMismatch(cfg_.dim, coords.size());
  if (in_cluster_ == 0) start_cluster();
  for (std::size_t j = 0; j < cfg_.dim; ++j) {
    const double range = active_[j] ? cfg_.spread : cfg_.noise;
    coords[j] = coords_rng_.uniform(-range, range);
  }
  weight = 1;
  if (++in_cluster_ == cfg_.points_per_cluster) {
    in_cluster_ = 0;
    ++cluster_;
  }
  return true;
}

// ---------------------------------------------------------------------------

LowerBoundSource::LowerBoundSource(LowerBoundConfig cfg) : cfg_(cfg) { validate(cfg_); }

bool LowerBoundSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (emitted_ >= cfg_.n) return false;
  if (coords.size() != dim()) throw DimensionMismatch(dim(), coords.size());
  const std::size_t per_vertex = cfg_.n / cfg_.k;
  const std::size_t vertex = emitted_ / per_vertex;
  const std::size_t member = emitted_ % per_vertex;
  std::fill(coords.begin(), coords.end(), 0.0);
  coords[vertex] = cfg_.spread;
  coords[cfg_.k + vertex * per_vertex + member] = cfg_.noise;
  weight = 1;
  ++emitted_;
  return true;
}

// ---------------------------------------------------------------------------

RandomSource::RandomSource(RandomConfig cfg) : cfg_(cfg), rng_(cfg.seed) { validate(cfg_); }

void RandomSource::rewind() {
  emitted_ = 0;
  rng_ = SplitMix64(cfg_.seed);
}

bool RandomSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (emitted_ >= cfg_.n) return false;
  if (coords.size() != cfg_.n) throw DimensionMismatch(cfg_.n, coords.size());
  for (double& c : coords) c = rng_.uniform(-cfg_.spread, cfg_.spread);
  weight = 1;
  ++emitted_;
  return true;
}

}  // namespace piecy::datagen
