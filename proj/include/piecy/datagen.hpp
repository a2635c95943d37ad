#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "piecy/rng.hpp"
#include "piecy/stream_io.hpp"

namespace piecy::datagen {

/// `clusters` groups of `points_per_cluster` points in R^dim. Each group draws
/// `active_dims` coordinates (without replacement) once; its points are uniform
/// in [-spread, spread] on those and uniform in [-noise, noise] elsewhere.
struct SwnConfig {
  std::size_t clusters = 1;
  std::size_t points_per_cluster = 1;
  std::size_t dim = 1;
  std::size_t active_dims = 1;
  double spread = 10.0;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

/// n points in R^(k+n): point j of vertex i is spread * e_i plus noise * e_(k + i*(n/k) + j).
/// The construction is deterministic; `seed` is accepted for interface
/// uniformity and does not change the output.
struct LowerBoundConfig {
  std::size_t k = 2;
  std::size_t n = 2;
  double spread = 1000.0;
  double noise = 100.0;
  std::uint64_t seed = 0;
};

/// n points in R^n with iid uniform coordinates in [-spread, spread].
struct RandomConfig {
  std::size_t n = 1;
  double spread = 10.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when the configuration is unusable.
void validate(const SwnConfig& cfg);
void validate(const LowerBoundConfig& cfg);
void validate(const RandomConfig& cfg);

/// Streams a StructuredWithNoise instance cluster by cluster in O(dim) memory.
class StructuredWithNoiseSource final : public io::PointSource {
 public:
  explicit StructuredWithNoiseSource(SwnConfig cfg);

  std::size_t dim() const override { return cfg_.dim; }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override;

  std::size_t size() const noexcept { return cfg_.clusters * cfg_.points_per_cluster; }

  /// Active coordinates of the cluster currently being emitted.
  const std::vector<bool>& active_mask() const noexcept { return active_; }

 private:
  void start_cluster();

  SwnConfig cfg_;
  std::size_t cluster_ = 0;
  std::size_t in_cluster_ = 0;
  std::vector<bool> active_;
  std::vector<std::size_t> permutation_;
  SplitMix64 coords_rng_;
};

class LowerBoundSource final : public io::PointSource {
 public:
  explicit LowerBoundSource(LowerBoundConfig cfg);

  std::size_t dim() const override { return cfg_.k + cfg_.n; }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override { emitted_ = 0; }

  std::size_t size() const noexcept { return cfg_.n; }

 private:
  LowerBoundConfig cfg_;
  std::size_t emitted_ = 0;
};

class RandomSource final : public io::PointSource {
 public:
  explicit RandomSource(RandomConfig cfg);

  std::size_t dim() const override { return cfg_.n; }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override;

  std::size_t size() const noexcept { return cfg_.n; }

 private:
  RandomConfig cfg_;
  std::size_t emitted_ = 0;
  SplitMix64 rng_;
};

}  // namespace piecy::datagen
