#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "piecy/eval.hpp"
#include "piecy/pipeline.hpp"
#include "piecy/stream_io.hpp"

namespace piecy::cli {

enum class Algorithm { bico, piecy, piecy_mr };
enum class EvalMode { coreset, full, both };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm algo);
EvalMode parse_eval_mode(const std::string& name);
std::string eval_mode_name(EvalMode mode);

/// Fully resolved run parameters (defaults already applied).
struct RunOptions {
  Algorithm algorithm = Algorithm::bico;
  std::size_t k = 1;
  std::size_t coreset_size = 200;
  std::size_t piece_size = 200;
  std::size_t svd_dim = 2;
  std::size_t num_pieces = 3;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::size_t repetitions = 5;
  EvalMode eval = EvalMode::coreset;
  std::uint64_t seed = 0;
};

/// Fills the k-dependent defaults: coreset size 200k, svd dim ceil(3k/2),
/// piece size equal to the coreset size.
RunOptions defaults_for(std::size_t k);

struct RunReport {
  std::string algorithm;
  RunOptions options;
  std::uint64_t n = 0;
  std::uint64_t total_weight = 0;
  std::size_t d = 0;
  std::size_t coreset_size = 0;
  std::size_t svd_calls = 0;
  std::size_t pieces = 0;
  pipeline::PhaseTimes times;
  double eval_seconds = 0.0;
  std::optional<eval::CostSummary> coreset_cost;
  std::optional<eval::CostSummary> full_cost;
  /// Tree instrumentation (piecy-mr only).
  std::vector<std::size_t> flushes;
  std::size_t peak_live_engines = 0;
};

inline constexpr int kReportSchemaVersion = 1;

struct RunResult {
  RunReport report;
  std::vector<coreset::WeightedPoint> coreset;
};

/// Runs the selected pipeline over `source` in one pass, then evaluates. The
/// `full` evaluation rewinds `source` for a second pass.
RunResult run_pipeline(const RunOptions& options, io::PointSource& source);

/// Report as a JSON document (schema "piecy-report", version kReportSchemaVersion).
/// With `include_timings` false the wall-clock fields are omitted, so that two
/// runs with identical inputs and seeds compare equal.
std::string to_json_text(const RunReport& report, bool include_timings = true);

/// Command-line entry point. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace piecy::cli
