// Command-line front end: stream generation, online detection over files or
// standard input, and grid benchmarking.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 partial bench failure.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abcd/bench.hpp"
#include "abcd/detector.hpp"
#include "abcd/generators.hpp"
#include "abcd/io.hpp"
#include "abcd/models.hpp"
#include "abcd/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct GenerateArgs {
  std::string generator = "normal-m";
  int d = 24;
  int d_star = 8;
  std::int64_t len = 10000;
  std::int64_t every = 2000;
  std::int64_t interval = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<double> shifts{0.3};
  std::vector<double> noise_probs{0.1, 0.3};
  int centroids = 5;
  double rbf_noise_std = 0.05;
};

struct RunArgs {
  std::string input = "-";
  std::string format = "csv";
  std::string model = "pca";
  double eta = 0.5;
  int epochs = 50;
  double learning_rate = 1e-3;
  double rbf_gamma = 0.0;
  double delta = 0.05;
  double tau = 2.5;
  int n_min = 100;
  int k_max = 20;
  std::int64_t n_max = 0;
  double bound_m = 0.1;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::string norm_bounds;
  bool strict = false;
  std::string save_model;
  std::string load_model;
};

struct BenchArgs {
  std::string manifest;
  std::string out = "metrics.csv";
};

template <typename T>
std::vector<T> cycle_to(const std::vector<T>& values, std::size_t n) {
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(values[i % values.size()]);
  return out;
}

int cmd_generate(const GenerateArgs& args) {
  if (args.len < 1 || args.every < 1) {
    std::cerr << "generate: --len and --every must be positive\n";
    return kExitUsage;
  }
  if (args.len % args.every != 0) {
    std::cerr << "generate: --len must be a multiple of --every (one concept per segment)\n";
    return kExitUsage;
  }
  const int n_concepts = static_cast<int>(args.len / args.every);
  abcd::DriftSchedule schedule;
  schedule.interval = args.interval;

  abcd::StreamWithTruth stream;
  try {
    if (args.generator == "hsphere") {
      stream = abcd::gen_hsphere(args.d, args.d_star, n_concepts, args.every, schedule, args.seed);
    } else if (args.generator == "normal-m" || args.generator == "normal-v") {
      const auto kind = args.generator == "normal-m" ? abcd::NormalChangeKind::mean
                                                     : abcd::NormalChangeKind::variance;
      const auto shifts = cycle_to(args.shifts, static_cast<std::size_t>(n_concepts - 1));
      stream = abcd::gen_normal(args.d, args.d_star, kind, shifts, args.every, schedule, args.seed);
    } else if (args.generator == "led") {
      const auto probs = cycle_to(args.noise_probs, static_cast<std::size_t>(n_concepts));
      stream = abcd::gen_led(n_concepts, args.every, probs, schedule, args.seed);
    } else if (args.generator == "rbf") {
      stream = abcd::gen_rbf(args.d, args.centroids, args.every, n_concepts, schedule, args.seed,
                             args.rbf_noise_std);
    } else {
      std::cerr << "generate: unknown generator '" << args.generator << "'\n";
      return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "generate: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string prefix =
      args.out.empty() ? args.generator + "-s" + std::to_string(args.seed) : args.out;
  const std::string csv_path = prefix + ".csv";
  const std::string truth_path = prefix + ".truth.json";
  {
    std::ofstream csv(csv_path);
    if (!csv) {
      std::cerr << "generate: cannot write " << csv_path << "\n";
      return kExitData;
    }
    abcd::write_stream_csv(csv, stream);
  }
  {
    std::ofstream truth(truth_path);
    if (!truth) {
      std::cerr << "generate: cannot write " << truth_path << "\n";
      return kExitData;
    }
    truth << abcd::truth_to_json(stream).dump(2) << "\n";
  }
  std::cerr << "generate: wrote " << stream.observations.size() << " x " << stream.d
            << " observations to " << csv_path << " (truth: " << truth_path << ")\n";
  return kExitOk;
}

abcd::DetectorConfig detector_config_from(const RunArgs& args) {
  abcd::DetectorConfig config;
  config.delta = args.delta;
  config.tau = args.tau;
  config.n_min = args.n_min;
  config.k_max = args.k_max;
  config.n_max = args.n_max;
  config.M = args.bound_m;
  config.model.kind = abcd::model_kind_from_string(args.model);
  config.model.eta = args.eta;
  config.model.epochs = args.epochs;
  config.model.learning_rate = args.learning_rate;
  config.model.rbf_gamma = args.rbf_gamma;
  config.model.seed = args.seed;
  config.validate();
  return config;
}

bool preloaded_dim_mismatch(const abcd::StreamRunner& runner, int d) {
  return runner.detector() && runner.detector()->dim() > 0 && runner.detector()->dim() != d;
}

int cmd_run(const RunArgs& args) {
  abcd::DetectorConfig config;
  try {
    config = detector_config_from(args);
  } catch (const std::exception& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitUsage;
  }

  std::ifstream file;
  std::istream* in = &std::cin;
  if (args.input != "-") {
    file.open(args.input);
    if (!file) {
      std::cerr << "run: cannot open " << args.input << "\n";
      return kExitData;
    }
    in = &file;
  }
  const abcd::RowFormat format =
      args.format == "jsonl" ? abcd::RowFormat::jsonl : abcd::RowFormat::csv;

  abcd::RunOptions options;
  options.detector = config;
  options.normalize = args.normalize || !args.norm_bounds.empty();
  if (!args.norm_bounds.empty()) {
    std::ifstream bounds_file(args.norm_bounds);
    if (!bounds_file) {
      std::cerr << "run: cannot open " << args.norm_bounds << "\n";
      return kExitData;
    }
    try {
      options.fixed_bounds = abcd::Normalizer::from_json(nlohmann::json::parse(bounds_file));
    } catch (const std::exception& e) {
      std::cerr << "run: bad normalization bounds: " << e.what() << "\n";
      return kExitData;
    }
  }

  std::unique_ptr<abcd::EncoderDecoder> preloaded;
  if (!args.load_model.empty()) {
    std::ifstream model_file(args.load_model);
    if (!model_file) {
      std::cerr << "run: cannot open " << args.load_model << "\n";
      return kExitData;
    }
    try {
      preloaded = abcd::model_from_json(nlohmann::json::parse(model_file));
    } catch (const std::exception& e) {
      std::cerr << "run: bad model file: " << e.what() << "\n";
      return kExitData;
    }
    if (options.normalize && !options.fixed_bounds) {
      std::cerr << "run: --load-model with --normalize requires --norm-bounds\n";
      return kExitUsage;
    }
  }

  abcd::StreamRunner runner(options, std::move(preloaded));
  abcd::RowReader reader(*in, format);
  int d = 0;
  std::int64_t skipped = 0;
  bool banner_printed = false;
  bool model_saved = args.save_model.empty();

  while (auto row = reader.next()) {
    std::string problem = row->error;
    if (problem.empty() && d > 0 && static_cast<int>(row->values.size()) != d) {
      std::cerr << "run: dimension changed from " << d << " to " << row->values.size()
                << " at line " << row->line << "\n";
      return kExitData;
    }
    if (problem.empty() && !options.normalize) {
      for (double v : row->values) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          problem = "value outside [0,1] (use --normalize for raw data)";
          break;
        }
      }
    }
    if (!problem.empty()) {
      if (args.strict) {
        std::cerr << "run: line " << row->line << ": " << problem << "\n";
        return kExitData;
      }
      std::cerr << "run: skipping line " << row->line << ": " << problem << "\n";
      ++skipped;
      continue;
    }

    if (d == 0) {
      d = static_cast<int>(row->values.size());
      if (preloaded_dim_mismatch(runner, d)) {
        std::cerr << "run: loaded model expects d=" << runner.detector()->dim()
                  << " but the stream has d=" << d << "\n";
        return kExitData;
      }
      std::cerr << "run: d=" << d << " d'=" << config.model.bottleneck(d)
                << " model=" << args.model << " delta=" << config.delta << " tau=" << config.tau
                << " nmin=" << config.n_min << " kmax=" << config.k_max
                << " nmax=" << config.n_max << " M=" << config.M
                << " normalize=" << (options.normalize ? "on" : "off") << "\n";
      banner_printed = true;
    }

    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
        row->values.data(), static_cast<Eigen::Index>(row->values.size()));
    std::optional<abcd::ChangeReport> report;
    try {
      report = runner.push(x);
    } catch (const std::exception& e) {
      std::cerr << "run: line " << row->line << ": " << e.what() << "\n";
      return kExitData;
    }
    if (report) {
      std::cout << abcd::report_to_json(*report).dump() << "\n";
      std::cout.flush();
    }
    if (!model_saved && runner.detector() && runner.detector()->model()) {
      std::ofstream model_out(args.save_model);
      if (!model_out) {
        std::cerr << "run: cannot write " << args.save_model << "\n";
        return kExitData;
      }
      model_out << abcd::model_to_json(*runner.detector()->model()).dump() << "\n";
      model_saved = true;
    }
  }

  if (!banner_printed) std::cerr << "run: no usable observations\n";
  const abcd::RunSummary summary = runner.summary();
  std::cerr << "run: processed=" << summary.processed << " reports=" << summary.reports
            << " skipped=" << skipped << " mean_latency_us=" << summary.mean_latency_us << "\n";
  return kExitOk;
}

int cmd_bench(const BenchArgs& args) {
  std::ifstream manifest_file(args.manifest);
  if (!manifest_file) {
    std::cerr << "bench: cannot open " << args.manifest << "\n";
    return kExitData;
  }
  abcd::BenchManifest manifest;
  try {
    manifest = abcd::manifest_from_json(nlohmann::json::parse(manifest_file));
  } catch (const std::exception& e) {
    std::cerr << "bench: bad manifest: " << e.what() << "\n";
    return kExitData;
  }

  // Every referenced file must load before any cell runs.
  std::vector<abcd::StreamWithTruth> streams;
  for (const auto& entry : manifest.streams) {
    std::ifstream truth_file(entry.truth_path);
    if (!truth_file) {
      std::cerr << "bench: cannot open " << entry.truth_path << "\n";
      return kExitData;
    }
    abcd::StreamWithTruth stream;
    try {
      stream = abcd::truth_from_json(nlohmann::json::parse(truth_file));
    } catch (const std::exception& e) {
      std::cerr << "bench: bad truth file " << entry.truth_path << ": " << e.what() << "\n";
      return kExitData;
    }
    std::ifstream csv_file(entry.csv_path);
    if (!csv_file) {
      std::cerr << "bench: cannot open " << entry.csv_path << "\n";
      return kExitData;
    }
    try {
      stream.observations = abcd::read_observations(csv_file, abcd::RowFormat::csv);
    } catch (const std::exception& e) {
      std::cerr << "bench: bad stream file " << entry.csv_path << ": " << e.what() << "\n";
      return kExitData;
    }
    streams.push_back(std::move(stream));
  }

  const auto cells = abcd::run_grid(streams, manifest.configs);

  std::ofstream out(args.out);
  if (!out) {
    std::cerr << "bench: cannot write " << args.out << "\n";
    return kExitData;
  }
  out << abcd::kMetricsCsvHeader << "\n";
  int failures = 0;
  for (const auto& cell : cells) {
    const auto& entry = manifest.streams[cell.stream_index];
    const auto& stream = streams[cell.stream_index];
    if (cell.metrics) {
      abcd::write_metrics_row(out, entry.id, stream.generator, stream.seed,
                              manifest.configs[cell.config_index], *cell.metrics);
    } else {
      std::cerr << "bench: cell failed: stream=" << entry.id << " " << cell.fingerprint << ": "
                << cell.error << "\n";
      ++failures;
    }
  }
  std::cerr << "bench: " << cells.size() - failures << " cells written to " << args.out;
  if (failures > 0) std::cerr << ", " << failures << " failed";
  std::cerr << "\n";
  return failures > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming change detection over encoder-decoder reconstruction loss"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic stream with ground truth");
  gen->add_option("--gen", gen_args.generator, "hsphere | normal-m | normal-v | led | rbf")
      ->envname("ABCD_GEN");
  gen->add_option("--d", gen_args.d, "Stream dimensionality")->envname("ABCD_D");
  gen->add_option("--dstar", gen_args.d_star, "Dimensions carrying the concept")
      ->envname("ABCD_DSTAR");
  gen->add_option("--len", gen_args.len, "Total observations")->envname("ABCD_LEN");
  gen->add_option("--every", gen_args.every, "Observations per concept segment")
      ->envname("ABCD_EVERY");
  gen->add_option("--interval", gen_args.interval, "Drift interval width (1 = abrupt)")
      ->envname("ABCD_INTERVAL");
  gen->add_option("--seed", gen_args.seed, "RNG seed")->envname("ABCD_SEED");
  gen->add_option("--out", gen_args.out, "Output prefix (default <gen>-s<seed>)")
      ->envname("ABCD_OUT");
  gen->add_option("--shift", gen_args.shifts, "normal-m/v: per-change shift/scale, cycled")
      ->envname("ABCD_SHIFT");
  gen->add_option("--noise-prob", gen_args.noise_probs, "led: per-concept flip probability, cycled")
      ->envname("ABCD_NOISE_PROB");
  gen->add_option("--centroids", gen_args.centroids, "rbf: number of centroids")
      ->envname("ABCD_CENTROIDS");
  gen->add_option("--rbf-noise-std", gen_args.rbf_noise_std, "rbf: Gaussian noise level")
      ->envname("ABCD_RBF_NOISE_STD");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Detect changes over a CSV/JSONL stream");
  run->add_option("input", run_args.input, "Input file, or - for stdin");
  run->add_option("--format", run_args.format, "csv | jsonl")->envname("ABCD_FORMAT");
  run->add_option("--model", run_args.model, "pca | kpca | autoencoder")->envname("ABCD_MODEL");
  run->add_option("--eta", run_args.eta, "Bottleneck fraction in (1/d, 1)")->envname("ABCD_ETA");
  run->add_option("--epochs", run_args.epochs, "Autoencoder training epochs")
      ->envname("ABCD_EPOCHS");
  run->add_option("--lr", run_args.learning_rate, "Autoencoder learning rate")
      ->envname("ABCD_LR");
  run->add_option("--rbf-gamma", run_args.rbf_gamma, "Kernel width (0 = 1/d)")
      ->envname("ABCD_RBF_GAMMA");
  run->add_option("--delta", run_args.delta, "Change threshold on the score")
      ->envname("ABCD_DELTA");
  run->add_option("--tau", run_args.tau, "Subspace threshold in [0,4]")->envname("ABCD_TAU");
  run->add_option("--nmin", run_args.n_min, "Warm-up sample size")->envname("ABCD_NMIN");
  run->add_option("--kmax", run_args.k_max, "Max evaluated splits per observation")
      ->envname("ABCD_KMAX");
  run->add_option("--nmax", run_args.n_max, "Max stored window entries (0 = unlimited)")
      ->envname("ABCD_NMAX");
  run->add_option("--bound-m", run_args.bound_m, "Bernstein bound parameter M")
      ->envname("ABCD_BOUND_M");
  run->add_option("--seed", run_args.seed, "Model init seed")->envname("ABCD_SEED");
  run->add_flag("--normalize", run_args.normalize, "Min-max normalize from the warm-up sample")
      ->envname("ABCD_NORMALIZE");
  run->add_option("--norm-bounds", run_args.norm_bounds,
                  "JSON file with fixed per-dimension min/max")
      ->envname("ABCD_NORM_BOUNDS");
  run->add_flag("--strict", run_args.strict, "Abort on the first malformed row")
      ->envname("ABCD_STRICT");
  run->add_option("--save-model", run_args.save_model, "Write the first trained model to a file")
      ->envname("ABCD_SAVE_MODEL");
  run->add_option("--load-model", run_args.load_model, "Start from a saved model (skips warm-up)")
      ->envname("ABCD_LOAD_MODEL");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run a grid of configs over a stream manifest");
  bench->add_option("--manifest", bench_args.manifest, "JSON manifest with streams and configs")
      ->required()
      ->envname("ABCD_MANIFEST");
  bench->add_option("--out", bench_args.out, "Metrics CSV path")->envname("ABCD_BENCH_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_args);
    if (run->parsed()) return cmd_run(run_args);
    if (bench->parsed()) return cmd_bench(bench_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
