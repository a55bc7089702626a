#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bnnmix/harness.hpp"
#include "bnnmix/io.hpp"
#include "selftest.hpp"

namespace {

using bnnmix::ExperimentConfig;
using bnnmix::ExperimentOutput;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  std::optional<double> threshold;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bnnmix::InvalidArgument(fmt::format("cannot open config '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Defaults that differ per experiment; the config file and flags override them.
ExperimentConfig experiment_defaults(const std::string& command) {
  ExperimentConfig cfg;
  if (command == "variance-scaling") {
    cfg.candidate_source = bnnmix::CandidateSource::kEquivalenceClass;
    cfg.d_list = {50, 100, 150};
    cfg.n_over_d = {0.7};
    cfg.p_over_n = {1.5, 2.0, 2.4};
    cfg.n_test_points = 10;
  } else if (command == "prior-comparison") {
    cfg.candidate_source = bnnmix::CandidateSource::kEquivalenceClass;
    cfg.d_list = {100};
    cfg.n_over_d = {0.7};
    cfg.p_over_d = {1.7};
  } else if (command == "predict" || command == "classify") {
    cfg.d_list = {10};
    cfg.n_over_d = {0.5};
    cfg.p_over_d = {1.0};
  }
  return cfg;
}

ExperimentConfig resolve_config(const std::string& command, const GlobalOptions& opts) {
  ExperimentConfig cfg = experiment_defaults(command);
  if (!opts.config_path.empty()) cfg = ExperimentConfig::from_json(read_file(opts.config_path), cfg);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.threads) cfg.threads = *opts.threads;
  if (opts.threshold) cfg.threshold = *opts.threshold;
  cfg.validate();
  return cfg;
}

int finish(const ExperimentOutput& output, const ExperimentConfig& cfg) {
  bnnmix::write_output(output, cfg, cfg.output_dir);
  std::cerr << fmt::format("{}: wrote {} file(s) to {}\n", output.experiment,
                           output.tables.size() + 1, cfg.output_dir);
  if (output.failed_cells > 0) {
    std::cerr << fmt::format("{}: {} cell(s) failed, see the error column\n", output.experiment,
                             output.failed_cells);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-mixture posterior predictives for networks with a discrete interior prior"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON file with ExperimentConfig fields")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "Master seed");
  app.add_option("--out", opts.out_dir, "Output directory");
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--threshold", opts.threshold, "Significant-component weight threshold");

  auto* predict = app.add_subcommand("predict", "Dump one mixture predictive");
  std::string data_dir;
  std::string candidates_dir;
  predict->add_option("--data", data_dir, "Dataset directory (x1.csv, y.csv, meta.json)")
      ->check(CLI::ExistingDirectory);
  predict->add_option("--candidates", candidates_dir, "Candidate set directory")
      ->check(CLI::ExistingDirectory);
  auto* save_inputs =
      predict->add_flag("--save-inputs", "Also write the dataset and candidate set");

  app.add_subcommand("heatmap", "Significant-component counts over the experiment grid");
  app.add_subcommand("pdf-dump", "Mixture densities and components per cell");
  app.add_subcommand("variance-scaling", "Mixture variance as d grows at fixed n/d and p/n");
  app.add_subcommand("optimality-gap", "Conjectured optimum versus Gaussian candidates");
  app.add_subcommand("prior-comparison", "Constructed versus prior-drawn parameter histograms");
  auto* classify = app.add_subcommand("classify", "Class probabilities on synthetic labels");
  bool renormalize = false;
  classify->add_flag("--renormalize", renormalize, "Rescale class probabilities to sum to 1");
  app.add_subcommand("selftest", "Compare the library against reference implementations");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "selftest") {
      const int failures = bnnmix::cli::run_selftest(opts.seed.value_or(0), std::cout);
      return failures == 0 ? 0 : 1;
    }
    const ExperimentConfig cfg = resolve_config(command, opts);
    if (command == "predict") {
      if (data_dir.empty() != candidates_dir.empty())
        throw bnnmix::InvalidArgument("--data and --candidates must be given together");
      if (!data_dir.empty()) {
        const auto data = bnnmix::load_dataset(data_dir);
        const auto [candidates, shape] = bnnmix::load_candidates(candidates_dir);
        return finish(bnnmix::run_predict(cfg, data, candidates, shape), cfg);
      }
      const auto output = bnnmix::run_predict(cfg);
      if (*save_inputs) {
        const auto c = bnnmix::grid_cells(cfg).front();
        const auto data = bnnmix::generate_dataset(c.d, c.n, c.noise_var, cfg.generator,
                                                   bnnmix::dataset_seed(cfg, c.d, c.n));
        const auto shape = bnnmix::NetworkShape::two_layer(c.d, c.p);
        const auto candidates =
            cfg.candidate_source == bnnmix::CandidateSource::kGaussian
                ? bnnmix::sample_gaussian_candidates(shape, cfg.j_count,
                                                     bnnmix::GaussianPriorSpec{cfg.variance_scale},
                                                     bnnmix::candidate_seed(cfg, c.d, c.p))
                : bnnmix::build_equivalence_class(data, shape, cfg.equivalence_spec(),
                                                  bnnmix::candidate_seed(cfg, c.d, c.p, c.n));
        const std::filesystem::path root(cfg.output_dir);
        bnnmix::save_dataset(data, root / "dataset");
        bnnmix::save_candidates(candidates, shape, root / "candidates");
      }
      return finish(output, cfg);
    }
    if (command == "heatmap") return finish(bnnmix::run_heatmap(cfg), cfg);
    if (command == "pdf-dump") return finish(bnnmix::run_pdf_dump(cfg), cfg);
    if (command == "variance-scaling") return finish(bnnmix::run_variance_scaling(cfg), cfg);
    if (command == "optimality-gap") return finish(bnnmix::run_optimality_gap(cfg), cfg);
    if (command == "prior-comparison") return finish(bnnmix::run_prior_comparison(cfg), cfg);
    if (command == "classify") return finish(bnnmix::run_classify(cfg, renormalize), cfg);
  } catch (const std::exception& e) {
    std::cerr << "bnnmix: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
