#include "piecy/stream_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "piecy/errors.hpp"

namespace piecy::io {

namespace {

template <typename T>
T from_little_endian(const unsigned char* bytes) {
  std::array<unsigned char, sizeof(T)> raw;
  std::memcpy(raw.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  return std::bit_cast<T>(raw);
}

template <typename T>
void append_little_endian(std::vector<unsigned char>& out, T value) {
  auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  out.insert(out.end(), raw.begin(), raw.end());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

std::string line_message(std::uint64_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string byte_message(std::uint64_t offset, const std::string& what) {
  return "byte offset " + std::to_string(offset) + ": " + what;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "bin") return Format::bin;
  throw std::invalid_argument("unknown point format '" + std::string(name) + "'");
}

std::string_view format_name(Format format) {
  return format == Format::csv ? "csv" : "bin";
}

// ---------------------------------------------------------------------------
// CSV

CsvSource::CsvSource(std::filesystem::path path, bool weighted)
    : path_(std::move(path)), weighted_(weighted) {
  open();
}

void CsvSource::open() {
  in_ = std::ifstream(path_);
  if (!in_) throw std::runtime_error("cannot open " + path_.string());
  line_no_ = 0;
  has_pending_ = false;
  if (read_line(pending_)) {
    const auto fields = split_fields(pending_);
    const std::size_t leading = weighted_ ? 1 : 0;
    if (fields.size() <= leading) {
      throw ParseError(line_message(line_no_, "no coordinates"), line_no_);
    }
    dim_ = fields.size() - leading;
    has_pending_ = true;
  } else {
    dim_ = 0;
  }
}

bool CsvSource::read_line(std::string& line) {
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!is_blank(line)) return true;
  }
  return false;
}

void CsvSource::parse(const std::string& line, std::span<double> coords,
                      std::uint64_t& weight) const {
  const auto fields = split_fields(line);
  const std::size_t leading = weighted_ ? 1 : 0;
  if (fields.size() != dim_ + leading) {
    throw ParseError(line_message(line_no_, "expected " + std::to_string(dim_ + leading) +
                                                " fields, found " + std::to_string(fields.size())),
                     line_no_);
  }
  weight = 1;
  if (weighted_) {
    const auto f = fields[0];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), weight);
    if (ec != std::errc() || ptr != f.data() + f.size() || weight == 0) {
      throw ParseError(line_message(line_no_, "invalid weight '" + std::string(f) + "'"), line_no_);
    }
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto f = fields[i + leading];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
      throw ParseError(line_message(line_no_, "invalid number '" + std::string(f) + "'"), line_no_);
    }
    coords[i] = value;
  }
}

bool CsvSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (coords.size() != dim_) throw DimensionMismatch(dim_, coords.size());
  if (has_pending_) {
    has_pending_ = false;
    parse(pending_, coords, weight);
    return true;
  }
  std::string line;
  if (!read_line(line)) return false;
  parse(line, coords, weight);
  return true;
}

void CsvSource::rewind() { open(); }

CsvSink::CsvSink(const std::filesystem::path& path, bool weighted)
    : out_(path), weighted_(weighted) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void CsvSink::write(std::span<const double> coords, std::uint64_t weight) {
  buffer_.clear();
  char tmp[64];
  if (weighted_) {
    auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), weight);
    buffer_.append(tmp, ptr);
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (weighted_ || i > 0) buffer_.push_back(',');
    auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), coords[i]);
    buffer_.append(tmp, ptr);
  }
  buffer_.push_back('\n');
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
}

void CsvSink::close() {
  out_.flush();
  out_.close();
}

// ---------------------------------------------------------------------------
// Binary

BinSource::BinSource(std::filesystem::path path, bool weighted)
    : path_(std::move(path)), weighted_(weighted) {
  open();
}

void BinSource::open() {
  in_ = std::ifstream(path_, std::ios::binary);
  if (!in_) throw std::runtime_error("cannot open " + path_.string());
  offset_ = 0;
  unsigned char header[12];
  in_.read(reinterpret_cast<char*>(header), sizeof(header));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) {
    empty_ = true;
    dim_ = 0;
    return;
  }
  empty_ = false;
  if (got < 4 || std::memcmp(header, kBinMagic, 4) != 0) {
    throw ParseError(byte_message(0, "bad magic, expected SCPT"), 0);
  }
  if (got < sizeof(header)) {
    throw ParseError(byte_message(got, "truncated header"), got);
  }
  const auto version = from_little_endian<std::uint32_t>(header + 4);
  if (version != kBinVersion) {
    throw ParseError(byte_message(4, "unsupported version " + std::to_string(version)), 4);
  }
  dim_ = from_little_endian<std::uint32_t>(header + 8);
  if (dim_ == 0) throw ParseError(byte_message(8, "dimension must be positive"), 8);
  offset_ = sizeof(header);
  record_.resize((weighted_ ? 8 : 0) + 8 * dim_);
}

bool BinSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (empty_) return false;
  if (coords.size() != dim_) throw DimensionMismatch(dim_, coords.size());
  in_.read(reinterpret_cast<char*>(record_.data()), static_cast<std::streamsize>(record_.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) return false;
  if (got < record_.size()) {
    throw ParseError(byte_message(offset_, "truncated record (" + std::to_string(got) + " of " +
                                               std::to_string(record_.size()) + " bytes)"),
                     offset_);
  }
  const unsigned char* p = record_.data();
  weight = 1;
  if (weighted_) {
    weight = from_little_endian<std::uint64_t>(p);
    if (weight == 0) throw ParseError(byte_message(offset_, "zero weight"), offset_);
    p += 8;
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    coords[i] = from_little_endian<double>(p + 8 * i);
  }
  offset_ += record_.size();
  return true;
}

void BinSource::rewind() { open(); }

BinSink::BinSink(const std::filesystem::path& path, std::size_t dim, bool weighted)
    : out_(path, std::ios::binary), dim_(dim), weighted_(weighted) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  std::vector<unsigned char> header(kBinMagic, kBinMagic + 4);
  append_little_endian(header, kBinVersion);
  append_little_endian(header, static_cast<std::uint32_t>(dim));
  out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
}

void BinSink::write(std::span<const double> coords, std::uint64_t weight) {
  if (coords.size() != dim_) throw DimensionMismatch(dim_, coords.size());
  buffer_.clear();
  if (weighted_) append_little_endian(buffer_, weight);
  for (double v : coords) append_little_endian(buffer_, v);
  out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
}

void BinSink::close() {
  out_.flush();
  out_.close();
}

// ---------------------------------------------------------------------------

std::unique_ptr<PointSource> open_source(const std::filesystem::path& path, Format format,
                                         bool weighted) {
  if (format == Format::csv) return std::make_unique<CsvSource>(path, weighted);
  return std::make_unique<BinSource>(path, weighted);
}

std::unique_ptr<PointSink> open_sink(const std::filesystem::path& path, Format format,
                                     std::size_t dim, bool weighted) {
  if (format == Format::csv) return std::make_unique<CsvSink>(path, weighted);
  return std::make_unique<BinSink>(path, dim, weighted);
}

MatrixSource::MatrixSource(linalg::Matrix points, std::vector<std::uint64_t> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (!weights_.empty() && weights_.size() != static_cast<std::size_t>(points_.rows())) {
    throw DimensionMismatch(static_cast<std::size_t>(points_.rows()), weights_.size());
  }
}

bool MatrixSource::next(std::span<double> coords, std::uint64_t& weight) {
  if (row_ >= points_.rows()) return false;
  if (coords.size() != dim()) throw DimensionMismatch(dim(), coords.size());
  std::copy_n(points_.row(row_).data(), coords.size(), coords.begin());
  weight = weights_.empty() ? 1 : weights_[static_cast<std::size_t>(row_)];
  ++row_;
  return true;
}

bool CountingSource::next(std::span<double> coords, std::uint64_t& weight) {
  const bool ok = inner_.next(coords, weight);
  if (ok) ++reads_;
  return ok;
}

LoadedPoints read_all(PointSource& source) {
  const std::size_t d = source.dim();
  std::vector<double> values;
  std::vector<std::uint64_t> weights;
  std::vector<double> row(d);
  std::uint64_t w = 1;
  while (d > 0 && source.next(row, w)) {
    values.insert(values.end(), row.begin(), row.end());
    weights.push_back(w);
  }
  LoadedPoints out;
  out.points = linalg::Matrix(static_cast<Eigen::Index>(weights.size()), static_cast<Eigen::Index>(d));
  if (!values.empty()) {
    std::copy(values.begin(), values.end(), out.points.data());
  }
  out.weights = std::move(weights);
  return out;
}

std::uint64_t copy_stream(PointSource& source, PointSink& sink) {
  const std::size_t d = source.dim();
  std::vector<double> row(d);
  std::uint64_t w = 1;
  std::uint64_t count = 0;
  while (d > 0 && source.next(row, w)) {
    sink.write(row, w);
    ++count;
  }
  return count;
}

}  // namespace piecy::io
