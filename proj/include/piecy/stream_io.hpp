#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piecy/linalg.hpp"

namespace piecy::io {

/// A forward-only stream of (optionally weighted) points of fixed dimension.
class PointSource {
 public:
  virtual ~PointSource() = default;

  /// Point dimension; 0 for an empty stream whose dimension is unknown.
  virtual std::size_t dim() const = 0;

  /// Reads the next point into `coords` (size dim()) and its weight (1 for
  /// unweighted streams). Returns false at end of stream.
  virtual bool next(std::span<double> coords, std::uint64_t& weight) = 0;

  /// Restarts the stream from the beginning (used for second-pass evaluation).
  virtual void rewind() = 0;
};

/// Receives points, e.g. a file writer.
class PointSink {
 public:
  virtual ~PointSink() = default;
  virtual void write(std::span<const double> coords, std::uint64_t weight = 1) = 0;
  virtual void close() = 0;
};

enum class Format { csv, bin };

/// "csv" or "bin"; throws std::invalid_argument otherwise.
Format parse_format(std::string_view name);
std::string_view format_name(Format format);

/// Binary layout: "SCPT", u32 version (1), u32 d, then per point an optional
/// u64 weight (weighted streams) followed by d float64 values. All little-endian.
inline constexpr char kBinMagic[4] = {'S', 'C', 'P', 'T'};
inline constexpr std::uint32_t kBinVersion = 1;

/// Comma-separated text, one point per line. Weighted streams carry the
/// integer weight as the leading column. Blank lines are skipped. Errors carry
/// the 1-based line number.
class CsvSource final : public PointSource {
 public:
  CsvSource(std::filesystem::path path, bool weighted);

  std::size_t dim() const override { return dim_; }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override;

 private:
  bool read_line(std::string& line);
  void parse(const std::string& line, std::span<double> coords, std::uint64_t& weight) const;
  void open();

  std::filesystem::path path_;
  bool weighted_;
  std::ifstream in_;
  std::size_t dim_ = 0;
  std::uint64_t line_no_ = 0;
  std::string pending_;
  bool has_pending_ = false;
};

/// Binary point stream. Errors carry the byte offset of the offending field.
class BinSource final : public PointSource {
 public:
  BinSource(std::filesystem::path path, bool weighted);

  std::size_t dim() const override { return dim_; }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override;

 private:
  void open();

  std::filesystem::path path_;
  bool weighted_;
  std::ifstream in_;
  std::size_t dim_ = 0;
  std::uint64_t offset_ = 0;
  bool empty_ = false;
  std::vector<unsigned char> record_;
};

std::unique_ptr<PointSource> open_source(const std::filesystem::path& path, Format format,
                                         bool weighted);

class CsvSink final : public PointSink {
 public:
  CsvSink(const std::filesystem::path& path, bool weighted);
  void write(std::span<const double> coords, std::uint64_t weight = 1) override;
  void close() override;

 private:
  std::ofstream out_;
  bool weighted_;
  std::string buffer_;
};

class BinSink final : public PointSink {
 public:
  BinSink(const std::filesystem::path& path, std::size_t dim, bool weighted);
  void write(std::span<const double> coords, std::uint64_t weight = 1) override;
  void close() override;

 private:
  std::ofstream out_;
  std::size_t dim_;
  bool weighted_;
  std::vector<unsigned char> buffer_;
};

std::unique_ptr<PointSink> open_sink(const std::filesystem::path& path, Format format,
                                     std::size_t dim, bool weighted);

/// In-memory source over the rows of a matrix.
class MatrixSource final : public PointSource {
 public:
  explicit MatrixSource(linalg::Matrix points, std::vector<std::uint64_t> weights = {});

  std::size_t dim() const override { return static_cast<std::size_t>(points_.cols()); }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override { row_ = 0; }

 private:
  linalg::Matrix points_;
  std::vector<std::uint64_t> weights_;
  Eigen::Index row_ = 0;
};

/// Forwards to another source and counts the points it hands out.
class CountingSource final : public PointSource {
 public:
  explicit CountingSource(PointSource& inner) : inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  bool next(std::span<double> coords, std::uint64_t& weight) override;
  void rewind() override {
    ++rewinds_;
    inner_.rewind();
  }

  std::uint64_t reads() const noexcept { return reads_; }
  std::uint64_t rewinds() const noexcept { return rewinds_; }

 private:
  PointSource& inner_;
  std::uint64_t reads_ = 0;
  std::uint64_t rewinds_ = 0;
};

/// Drains a source into memory (rows and weights).
struct LoadedPoints {
  linalg::Matrix points;
  std::vector<std::uint64_t> weights;
};
LoadedPoints read_all(PointSource& source);

/// Copies every point of `source` into `sink`. Returns the number of points.
std::uint64_t copy_stream(PointSource& source, PointSink& sink);

}  // namespace piecy::io
