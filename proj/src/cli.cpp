#include "piecy/cli.hpp"

#include <chrono>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "piecy/datagen.hpp"
#include "piecy/errors.hpp"
#include "piecy/piecy_mr.hpp"

namespace piecy::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

json summary_json(const eval::CostSummary& s) {
  return json{{"min", s.min}, {"max", s.max}, {"avg", s.avg}, {"median", s.median}, {"values", s.values}};
}

io::Format format_for(const std::string& path, const std::string& explicit_format) {
  if (!explicit_format.empty()) return io::parse_format(explicit_format);
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".csv" ? io::Format::csv : io::Format::bin;
}

void write_coreset(const std::vector<coreset::WeightedPoint>& points, std::size_t d,
                   const std::string& path, io::Format format) {
  auto sink = io::open_sink(path, format, d, /*weighted=*/true);
  for (const auto& p : points) {
    sink->write(std::span<const double>(p.x.data(), static_cast<std::size_t>(p.x.size())), p.w);
  }
  sink->close();
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "bico") return Algorithm::bico;
  if (name == "piecy") return Algorithm::piecy;
  if (name == "piecy-mr") return Algorithm::piecy_mr;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::bico: return "bico";
    case Algorithm::piecy: return "piecy";
    case Algorithm::piecy_mr: return "piecy-mr";
  }
  return "?";
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "coreset") return EvalMode::coreset;
  if (name == "full") return EvalMode::full;
  if (name == "both") return EvalMode::both;
  throw std::invalid_argument("unknown evaluation mode '" + name + "'");
}

std::string eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::coreset: return "coreset";
    case EvalMode::full: return "full";
    case EvalMode::both: return "both";
  }
  return "?";
}

RunOptions defaults_for(std::size_t k) {
  RunOptions o;
  o.k = k;
  o.coreset_size = pipeline::default_coreset_size(k);
  o.svd_dim = pipeline::default_svd_dim(k);
  o.piece_size = o.coreset_size;
  return o;
}

RunResult run_pipeline(const RunOptions& options, io::PointSource& source) {
  RunResult result;
  RunReport& report = result.report;
  report.algorithm = algorithm_name(options.algorithm);
  report.options = options;
  report.d = source.dim();

  pipeline::RunStats stats;
  switch (options.algorithm) {
    case Algorithm::bico:
      result.coreset = pipeline::bico_run(source, options.coreset_size, &stats);
      break;
    case Algorithm::piecy: {
      const pipeline::PiecyConfig cfg{options.piece_size, options.svd_dim, options.k,
                                      options.coreset_size, options.oversample,
                                      options.power_iterations, options.seed};
      result.coreset = pipeline::piecy_run(source, cfg, &stats);
      break;
    }
    case Algorithm::piecy_mr: {
      const pipeline::MrConfig cfg{options.piece_size, options.num_pieces, options.svd_dim,
                                   options.k, options.coreset_size, options.oversample,
                                   options.power_iterations, options.seed};
      pipeline::MrStats mr;
      result.coreset = pipeline::piecy_mr_run(source, cfg, &mr);
      stats = mr.run;
      report.flushes = mr.flushes;
      report.peak_live_engines = mr.peak_live_engines;
      break;
    }
  }

  report.n = stats.points_read;
  report.total_weight = stats.total_weight;
  report.coreset_size = result.coreset.size();
  report.svd_calls = stats.svd_calls;
  report.pieces = stats.pieces;
  report.times = stats.times;

  if (!result.coreset.empty()) {
    const auto start = Clock::now();
    const eval::WeightedSet data = eval::WeightedSet::from_coreset(result.coreset);
    const eval::EvalOptions eval_options{options.repetitions, 100, 1e-4, options.seed};
    const bool full = options.eval != EvalMode::coreset;
    const eval::EvalOutcome outcome =
        eval::evaluate(data, options.k, eval_options, full ? &source : nullptr);
    if (options.eval != EvalMode::full) report.coreset_cost = outcome.coreset_cost;
    if (full) report.full_cost = outcome.full_cost;
    report.eval_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  }
  return result;
}

std::string to_json_text(const RunReport& report, bool include_timings) {
  const RunOptions& o = report.options;
  json doc;
  doc["schema"] = "piecy-report";
  doc["schema_version"] = kReportSchemaVersion;
  doc["algorithm"] = report.algorithm;
  doc["config"] = json{{"k", o.k},
                       {"coreset_size", o.coreset_size},
                       {"piece_size", o.piece_size},
                       {"svd_dim", o.svd_dim},
                       {"num_pieces", o.num_pieces},
                       {"oversample", o.oversample},
                       {"power_iterations", o.power_iterations},
                       {"repetitions", o.repetitions},
                       {"eval", eval_mode_name(o.eval)},
                       {"seed", o.seed}};
  doc["n"] = report.n;
  doc["total_weight"] = report.total_weight;
  doc["d"] = report.d;
  doc["k"] = o.k;
  doc["coreset_size"] = report.coreset_size;
  doc["svd_calls"] = report.svd_calls;
  doc["pieces"] = report.pieces;
  if (report.algorithm == "piecy-mr") {
    doc["tree"] = json{{"flushes", report.flushes}, {"peak_live_engines", report.peak_live_engines}};
  }
  if (include_timings) {
    doc["timings"] = json{{"ingest", report.times.ingest},
                          {"svd", report.times.svd},
                          {"coreset", report.times.coreset},
                          {"eval", report.eval_seconds}};
  }
  json cost = json::object();
  if (report.coreset_cost) cost["coreset"] = summary_json(*report.coreset_cost);
  if (report.full_cost) cost["full"] = summary_json(*report.full_cost);
  doc["cost"] = cost;
  doc["seed"] = o.seed;
  return doc.dump(2);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming k-means coresets for high-dimensional data (bico, piecy, piecy-mr)"};

  std::string algo;
  std::size_t k = 0;
  std::optional<std::size_t> coreset_size, piece_size, svd_dim;
  std::size_t num_pieces = 3;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::size_t reps = 5;
  std::string eval_mode = "coreset";
  std::uint64_t seed = 0;
  std::string input, format, out_path, report_path;
  bool weighted = false;

  std::string gen;
  std::size_t clusters = 0, y = 0, dim = 0, active = 0, n = 0;
  std::optional<double> spread, noise;
  std::optional<std::size_t> spectrum_size;

  app.add_option("--algo", algo, "Pipeline: bico, piecy or piecy-mr")
      ->check(CLI::IsMember({"bico", "piecy", "piecy-mr"}));
  app.add_option("--k", k, "Number of centers");
  app.add_option("--coreset-size", coreset_size, "BICO feature budget (default 200k)");
  app.add_option("--piece-size", piece_size, "Points per SVD piece (default: coreset size)");
  app.add_option("--svd-dim", svd_dim, "Projection dimension (default ceil(3k/2))");
  app.add_option("--np", num_pieces, "Pieces per BICO instance in piecy-mr")->capture_default_str();
  app.add_option("--oversample", oversample, "Randomized SVD oversampling")->capture_default_str();
  app.add_option("--power-iterations", power_iterations, "Randomized SVD power iterations")
      ->capture_default_str();
  app.add_option("--seed", seed, "Seed for generators, SVD sketches and k-means++")->capture_default_str();
  app.add_option("--reps", reps, "k-means++ repetitions")->capture_default_str();
  app.add_option("--eval", eval_mode, "Cost evaluation: coreset, full or both")
      ->check(CLI::IsMember({"coreset", "full", "both"}))
      ->capture_default_str();
  app.add_option("--input", input, "Input point file");
  app.add_option("--format", format, "Point format: csv or bin (default from file extension)")
      ->check(CLI::IsMember({"csv", "bin"}));
  app.add_flag("--weighted", weighted, "Input carries point weights");
  app.add_option("--out", out_path, "Output file: generated points, or the weighted coreset");
  app.add_option("--report", report_path, "Write the run report here instead of stdout");
  app.add_option("--spectrum", spectrum_size, "Print the top singular values of the input");

  app.add_option("--gen", gen, "Generate an instance: swn, lowerbound or random")
      ->check(CLI::IsMember({"swn", "lowerbound", "random"}));
  app.add_option("--clusters", clusters, "swn: number of hidden clusters");
  app.add_option("--y", y, "swn: points per cluster");
  app.add_option("--d", dim, "swn: dimension");
  app.add_option("--x", active, "swn: active dimensions per cluster");
  app.add_option("--n", n, "lowerbound/random: number of points");
  app.add_option("--spread", spread, "Large scale (swn 10, lowerbound 1000, random 10)");
  app.add_option("--noise", noise, "Small scale (swn 0.5, lowerbound 100)");

  std::vector<const char*> argv{"piecy"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    std::unique_ptr<io::PointSource> source;
    if (!gen.empty()) {
      if (gen == "swn") {
        datagen::SwnConfig cfg{clusters, y, dim, active, spread.value_or(10.0), noise.value_or(0.5), seed};
        source = std::make_unique<datagen::StructuredWithNoiseSource>(cfg);
      } else if (gen == "lowerbound") {
        datagen::LowerBoundConfig cfg{k, n, spread.value_or(1000.0), noise.value_or(100.0), seed};
        source = std::make_unique<datagen::LowerBoundSource>(cfg);
      } else {
        datagen::RandomConfig cfg{n, spread.value_or(10.0), seed};
        source = std::make_unique<datagen::RandomSource>(cfg);
      }
      if (algo.empty() && !spectrum_size) {
        if (out_path.empty()) throw std::invalid_argument("--gen needs --out (or --algo)");
        auto sink = io::open_sink(out_path, format_for(out_path, format), source->dim(), false);
        const auto count = io::copy_stream(*source, *sink);
        sink->close();
        err << "wrote " << count << " points of dimension " << source->dim() << " to " << out_path << "\n";
        return 0;
      }
    } else {
      if (input.empty()) throw std::invalid_argument("need --input or --gen");
      source = io::open_source(input, format_for(input, format), weighted);
    }

    if (spectrum_size) {
      const io::LoadedPoints loaded = io::read_all(*source);
      const auto values = linalg::spectrum(loaded.points, *spectrum_size, seed);
      out << "index,singular_value\n";
      for (std::size_t i = 0; i < values.size(); ++i) out << (i + 1) << ',' << values[i] << '\n';
      return 0;
    }

    if (algo.empty()) throw std::invalid_argument("--algo is required");
    if (k == 0) throw std::invalid_argument("--k must be positive");
    RunOptions options = defaults_for(k);
    options.algorithm = parse_algorithm(algo);
    if (coreset_size) options.coreset_size = *coreset_size;
    options.piece_size = piece_size.value_or(options.coreset_size);
    if (svd_dim) options.svd_dim = *svd_dim;
    if (source->dim() > 0 && !svd_dim) options.svd_dim = std::min(options.svd_dim, source->dim());
    options.num_pieces = num_pieces;
    options.oversample = oversample;
    options.power_iterations = power_iterations;
    options.repetitions = reps;
    options.eval = parse_eval_mode(eval_mode);
    options.seed = seed;

    const RunResult result = run_pipeline(options, *source);
    if (!out_path.empty()) {
      write_coreset(result.coreset, result.report.d, out_path, format_for(out_path, ""));
    }
    const std::string text = to_json_text(result.report);
    if (report_path.empty()) {
      out << text << "\n";
    } else {
      std::ofstream file(report_path);
      if (!file) throw std::runtime_error("cannot write " + report_path);
      file << text << "\n";
    }
    return 0;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace piecy::cli
