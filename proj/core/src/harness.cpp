#include "bnnmix/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bnnmix/blr.hpp"
#include "bnnmix/classify.hpp"
#include "bnnmix/features.hpp"
#include "bnnmix/mixture.hpp"
#include "bnnmix/parallel.hpp"
#include "bnnmix/rng.hpp"

namespace bnnmix {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::uint64_t key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x51ed2701f3a5c7b9ULL;
  for (auto p : parts) h = hash_combine(h, p);
  return h;
}

std::string num(double v) { return format_double(v); }
std::string num(int v) { return std::to_string(v); }

std::string sanitize(std::string message) {
  std::replace(message.begin(), message.end(), ',', ';');
  std::replace(message.begin(), message.end(), '\n', ' ');
  return message;
}

/// Fills the numeric columns of a failed row with empty cells.
std::vector<std::string> failure_row(std::vector<std::string> prefix, std::size_t width,
                                     const std::string& message) {
  prefix.resize(width - 1);
  prefix.push_back(sanitize(message));
  return prefix;
}

double population_sd(std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

std::string cell_name(const GridCell& c) {
  return fmt::format("d{}_n{}_p{}_g{:g}", c.d, c.n, c.p, c.noise_var);
}

Dataset cell_dataset(const ExperimentConfig& cfg, const GridCell& c, int realization = 0) {
  return generate_dataset(c.d, c.n, c.noise_var, cfg.generator,
                          dataset_seed(cfg, c.d, c.n, realization));
}

/// Sets of candidates for a cell according to cfg.candidate_source.
CandidateSet cell_candidates(const ExperimentConfig& cfg, const GridCell& c, const Dataset& data,
                             int realization = 0) {
  const auto shape = NetworkShape::two_layer(c.d, c.p);
  if (cfg.candidate_source == CandidateSource::kGaussian) {
    return sample_gaussian_candidates(shape, cfg.j_count, GaussianPriorSpec{cfg.variance_scale},
                                      candidate_seed(cfg, c.d, c.p));
  }
  return build_equivalence_class(data, shape, cfg.equivalence_spec(),
                                 candidate_seed(cfg, c.d, c.p, c.n, realization));
}

ordered_json spec_json(const EquivalenceClassSpec& s) {
  return {{"n_rotations", s.n_rotations},       {"n_preimage", s.n_preimage},
          {"n_colspace", s.n_colspace},         {"preimage_scale", s.preimage_scale},
          {"colspace_scale", s.colspace_scale}, {"givens_per_rotation", s.givens_per_rotation}};
}

struct Histogram {
  std::vector<double> edges;
  std::vector<double> first;
  std::vector<double> second;
};

/// Density histograms of two samples on shared bins spanning both.
Histogram paired_histogram(std::span<const double> a, std::span<const double> b, int bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + width * i;
  auto fill = [&](std::span<const double> values) {
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : values) {
      auto idx = static_cast<int>((v - lo) / width);
      idx = std::clamp(idx, 0, bins - 1);
      counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(values.size()) * width;
    return counts;
  };
  h.first = fill(a);
  h.second = fill(b);
  return h;
}

Table histogram_table(const Histogram& h, const std::string& first, const std::string& second) {
  Table t{{"bin_lo", "bin_hi", first, second}, {}};
  for (std::size_t i = 0; i + 1 < h.edges.size(); ++i)
    t.add_row({num(h.edges[i]), num(h.edges[i + 1]), num(h.first[i]), num(h.second[i])});
  return t;
}

}  // namespace

std::string_view to_string(CandidateSource s) {
  return s == CandidateSource::kGaussian ? "gaussian" : "equivalence_class";
}

CandidateSource candidate_source_from_string(std::string_view name) {
  if (name == "gaussian") return CandidateSource::kGaussian;
  if (name == "equivalence_class") return CandidateSource::kEquivalenceClass;
  throw InvalidArgument(fmt::format("unknown candidate source '{}'", name));
}

void ExperimentConfig::validate() const {
  require(!d_list.empty() && !n_over_d.empty() && !p_over_d.empty() && !p_over_n.empty() &&
              !noise_var_list.empty(),
          "experiment lists must be non-empty");
  for (int d : d_list) require(d >= 1, "d must be positive");
  for (double r : n_over_d) require(r > 0.0, "n/d ratios must be positive");
  for (double r : p_over_d) require(r > 0.0, "p/d ratios must be positive");
  for (double r : p_over_n) require(r > 0.0, "p/n ratios must be positive");
  for (double g : noise_var_list) require(g > 0.0, "noise variances must be positive");
  require(j_count >= 1, "j_count must be at least 1");
  require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
  require(n_test_points >= 1 && n_y_realizations >= 1, "counts must be positive");
  require(grid_points >= 3 && mode_grid_points >= 3, "grids need at least 3 points");
  require(histogram_bins >= 1, "histogram needs at least one bin");
  require(classes >= 2, "classification needs at least two classes");
  require(variance_scale > 0.0, "variance scale must be positive");
  if (class_spec) class_spec->validate();
}

EquivalenceClassSpec ExperimentConfig::equivalence_spec() const {
  return class_spec.value_or(EquivalenceClassSpec{});
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  return from_json(text, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(fmt::format("config is not valid JSON: {}", e.what()));
  }
  try {
    auto get = [&](const char* name, auto& field) {
      if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
    };
    get("d_list", cfg.d_list);
    get("n_over_d", cfg.n_over_d);
    get("p_over_d", cfg.p_over_d);
    get("p_over_n", cfg.p_over_n);
    get("j_count", cfg.j_count);
    get("noise_var_list", cfg.noise_var_list);
    get("threshold", cfg.threshold);
    get("n_test_points", cfg.n_test_points);
    get("n_y_realizations", cfg.n_y_realizations);
    get("seed", cfg.seed);
    get("output_dir", cfg.output_dir);
    get("variance_scale", cfg.variance_scale);
    get("grid_points", cfg.grid_points);
    get("mode_grid_points", cfg.mode_grid_points);
    get("histogram_bins", cfg.histogram_bins);
    get("classes", cfg.classes);
    get("threads", cfg.threads);
    if (j.contains("candidate_source"))
      cfg.candidate_source = candidate_source_from_string(j.at("candidate_source").get<std::string>());
    if (j.contains("generator"))
      cfg.generator = target_generator_from_string(j.at("generator").get<std::string>());
    if (j.contains("class_spec") && !j.at("class_spec").is_null()) {
      const auto& s = j.at("class_spec");
      EquivalenceClassSpec spec;
      auto get_spec = [&](const char* name, auto& field) {
        if (s.contains(name)) field = s.at(name).get<std::decay_t<decltype(field)>>();
      };
      get_spec("n_rotations", spec.n_rotations);
      get_spec("n_preimage", spec.n_preimage);
      get_spec("n_colspace", spec.n_colspace);
      get_spec("preimage_scale", spec.preimage_scale);
      get_spec("colspace_scale", spec.colspace_scale);
      get_spec("givens_per_rotation", spec.givens_per_rotation);
      cfg.class_spec = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("bad config field: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  ordered_json j = {
      {"d_list", d_list},
      {"n_over_d", n_over_d},
      {"p_over_d", p_over_d},
      {"p_over_n", p_over_n},
      {"j_count", j_count},
      {"noise_var_list", noise_var_list},
      {"threshold", threshold},
      {"n_test_points", n_test_points},
      {"n_y_realizations", n_y_realizations},
      {"seed", seed},
      {"candidate_source", std::string(bnnmix::to_string(candidate_source))},
      {"class_spec", class_spec ? spec_json(*class_spec) : ordered_json(nullptr)},
      {"generator", std::string(bnnmix::to_string(generator))},
      {"variance_scale", variance_scale},
      {"grid_points", grid_points},
      {"mode_grid_points", mode_grid_points},
      {"histogram_bins", histogram_bins},
      {"classes", classes},
  };
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

int scaled_size(double ratio, int base) {
  return std::max(1, static_cast<int>(std::lround(ratio * base)));
}

std::vector<GridCell> grid_cells(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (int d : cfg.d_list)
    for (double nr : cfg.n_over_d)
      for (double pr : cfg.p_over_d)
        for (double g : cfg.noise_var_list)
          cells.push_back({d, scaled_size(nr, d), scaled_size(pr, d), g});
  return cells;
}

std::uint64_t dataset_seed(const ExperimentConfig& cfg, int d, int n, int realization) {
  return RngPolicy(cfg.seed).derive(key({std::uint64_t(d), std::uint64_t(n), std::uint64_t(realization)}),
                                    StreamTag::kInputs);
}

std::uint64_t test_point_seed(const ExperimentConfig& cfg, int d, int realization) {
  return RngPolicy(cfg.seed).derive(key({std::uint64_t(d), std::uint64_t(realization)}),
                                    StreamTag::kTestPoints);
}

std::uint64_t candidate_seed(const ExperimentConfig& cfg, int d, int p, int n, int realization) {
  return RngPolicy(cfg.seed).derive(
      key({std::uint64_t(d), std::uint64_t(p), std::uint64_t(n), std::uint64_t(realization)}),
      StreamTag::kCandidates);
}

const Table& ExperimentOutput::table(std::string_view file_name) const {
  for (const auto& t : tables)
    if (t.file_name == file_name) return t.table;
  throw InvalidArgument(fmt::format("no output table named '{}'", file_name));
}

ExperimentOutput run_heatmap(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.candidate_source == CandidateSource::kGaussian,
          "heatmap runs use Gaussian candidates");
  const auto cells = grid_cells(cfg);
  const std::vector<std::string> columns{
      "d", "n", "p", "noise_var", "j_count", "n_significant", "log10_n_significant",
      "significant_fraction", "n_local_modes", "mixture_mean", "mixture_variance", "logL_spread",
      "max_scaled_logL", "error"};
  std::vector<std::vector<std::string>> rows(cells.size());
  std::vector<int> failed(cells.size(), 0);

  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const auto& c = cells[i];
    std::vector<std::string> prefix{num(c.d), num(c.n), num(c.p), num(c.noise_var),
                                    num(cfg.j_count)};
    try {
      const Dataset data = cell_dataset(cfg, c);
      const auto shape = NetworkShape::two_layer(c.d, c.p);
      const Matrix test = generate_test_points(c.d, 1, test_point_seed(cfg, c.d)).front().x1_tilde;
      const GaussianPriorSpec prior{cfg.variance_scale};
      const auto seed = candidate_seed(cfg, c.d, c.p);
      // Candidates are generated and evaluated one at a time.
      std::vector<double> log_marginals(static_cast<std::size_t>(cfg.j_count));
      std::vector<double> log_masses(log_marginals.size());
      MixturePredictive mix;
      for (int j = 0; j < cfg.j_count; ++j) {
        const auto theta = gaussian_candidate(shape, j, cfg.j_count, prior, seed);
        const auto eval = evaluate_candidate(theta, data, test, shape);
        log_marginals[static_cast<std::size_t>(j)] = eval.log_marginal;
        log_masses[static_cast<std::size_t>(j)] = theta.log_prior_mass();
        mix.means.push_back(eval.moments[0].mean);
        mix.sds.push_back(std::sqrt(eval.moments[0].var));
      }
      mix.weights = mixture_weights(log_marginals, log_masses);
      const int significant = significant_component_count(mix, cfg.threshold);
      const auto moments = mixture_moments(mix);
      std::vector<double> scaled(log_marginals.size());
      for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] = log_marginals[j] / c.n;
      prefix.insert(prefix.end(),
                    {num(significant), num(std::log10(std::max(significant, 1))),
                     num(static_cast<double>(significant) / cfg.j_count),
                     num(local_mode_count(mix, cfg.mode_grid_points)), num(moments.mean),
                     num(moments.var), num(population_sd(scaled)),
                     num(*std::max_element(scaled.begin(), scaled.end())), ""});
      rows[i] = std::move(prefix);
    } catch (const std::exception& e) {
      rows[i] = failure_row(std::move(prefix), columns.size(), e.what());
      failed[i] = 1;
    }
  });

  ExperimentOutput out{"heatmap", {}, 0};
  Table table{columns, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.add_row(std::move(rows[i]));
    out.failed_cells += failed[i];
  }
  out.tables.push_back({"heatmap.csv", std::move(table)});
  return out;
}

ExperimentOutput run_pdf_dump(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto cells = grid_cells(cfg);
  const std::vector<std::string> summary_columns{
      "cell", "d", "n", "p", "noise_var", "test_point", "n_components", "n_significant",
      "n_local_modes", "mixture_mean", "mixture_variance", "error"};

  struct CellResult {
    std::vector<std::vector<std::string>> summary;
    std::vector<NamedTable> tables;
    int failed = 0;
  };
  std::vector<CellResult> results(cells.size());

  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const auto& c = cells[i];
    auto& result = results[i];
    const std::string name = cell_name(c);
    try {
      const Dataset data = cell_dataset(cfg, c);
      const auto shape = NetworkShape::two_layer(c.d, c.p);
      const auto candidates = cell_candidates(cfg, c, data);
      const auto tests = generate_test_points(c.d, cfg.n_test_points, test_point_seed(cfg, c.d));
      const auto evals = evaluate_candidates(candidates, data, tests, shape);
      for (std::size_t t = 0; t < tests.size(); ++t) {
        const auto mix = assemble_mixture(candidates, evals, t);
        // Plot range from the significant components only.
        MixturePredictive visible;
        for (std::size_t j = 0; j < mix.size(); ++j) {
          if (mix.weights[j] > cfg.threshold) {
            visible.weights.push_back(mix.weights[j]);
            visible.means.push_back(mix.means[j]);
            visible.sds.push_back(mix.sds[j]);
          }
        }
        double total = 0.0;
        for (double w : visible.weights) total += w;
        for (auto& w : visible.weights) w /= total;
        const auto grid = mixture_grid(visible, cfg.grid_points);
        const auto density = pdf_eval(mix, grid);
        Table pdf{{"x", "density"}, {}};
        for (std::size_t g = 0; g < grid.size(); ++g) pdf.add_row({num(grid[g]), num(density[g])});
        const std::string stem = fmt::format("pdf_{}_t{}", name, t);
        result.tables.push_back({stem + ".csv", std::move(pdf)});
        result.tables.push_back({stem + "_components.csv", mixture_table(mix)});
        const auto moments = mixture_moments(mix);
        result.summary.push_back({name, num(c.d), num(c.n), num(c.p), num(c.noise_var), num(int(t)),
                                  num(int(mix.size())),
                                  num(significant_component_count(mix, cfg.threshold)),
                                  num(local_mode_count(mix, cfg.mode_grid_points)),
                                  num(moments.mean), num(moments.var), ""});
      }
    } catch (const std::exception& e) {
      result.tables.clear();
      result.summary = {failure_row({name, num(c.d), num(c.n), num(c.p), num(c.noise_var)},
                                    summary_columns.size(), e.what())};
      result.failed = 1;
    }
  });

  ExperimentOutput out{"pdf_dump", {}, 0};
  Table summary{summary_columns, {}};
  for (auto& r : results) {
    for (auto& row : r.summary) summary.add_row(std::move(row));
    for (auto& t : r.tables) out.tables.push_back(std::move(t));
    out.failed_cells += r.failed;
  }
  out.tables.insert(out.tables.begin(), NamedTable{"pdf_summary.csv", std::move(summary)});
  return out;
}

ExperimentOutput run_variance_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  const double noise = cfg.noise_var_list.front();
  const auto spec = cfg.equivalence_spec();

  struct Cell {
    int d, n, p;
    double ratio;
  };
  std::vector<Cell> cells;
  for (double n_ratio : cfg.n_over_d)
    for (int d : cfg.d_list)
      for (double r : cfg.p_over_n) {
        const int n = scaled_size(n_ratio, d);
        cells.push_back({d, n, scaled_size(r, n), r});
      }

  const auto realizations = static_cast<std::size_t>(cfg.n_y_realizations);
  std::vector<double> medians(cells.size() * realizations,
                              std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(cells.size() * realizations);

  parallel_for(medians.size(), cfg.threads, [&](std::size_t task) {
    const auto& c = cells[task / realizations];
    const int r = static_cast<int>(task % realizations);
    try {
      const GridCell grid_cell{c.d, c.n, c.p, noise};
      const Dataset data = cell_dataset(cfg, grid_cell, r);
      const auto shape = NetworkShape::two_layer(c.d, c.p);
      const auto candidates =
          build_equivalence_class(data, shape, spec, candidate_seed(cfg, c.d, c.p, c.n, r));
      const auto tests = generate_test_points(c.d, cfg.n_test_points, test_point_seed(cfg, c.d, r));
      const auto evals = evaluate_candidates(candidates, data, tests, shape);
      std::vector<double> variances;
      for (std::size_t t = 0; t < tests.size(); ++t)
        variances.push_back(mixture_moments(assemble_mixture(candidates, evals, t)).var);
      medians[task] = median(std::move(variances));
    } catch (const std::exception& e) {
      errors[task] = e.what();
    }
  });

  ExperimentOutput out{"variance_scaling", {}, 0};
  Table table{{"d", "n", "p", "p_over_n", "noise_var", "n_realizations",
               "mean_median_variance", "standard_error", "error"},
              {}};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    std::vector<std::string> prefix{num(c.d), num(c.n), num(c.p), num(c.ratio), num(noise),
                                    num(cfg.n_y_realizations)};
    std::string error;
    std::vector<double> values;
    for (std::size_t r = 0; r < realizations; ++r) {
      const auto task = i * realizations + r;
      if (!errors[task].empty()) {
        error = errors[task];
        break;
      }
      values.push_back(medians[task]);
    }
    if (!error.empty()) {
      table.add_row(failure_row(std::move(prefix), table.columns.size(), "skipped: " + error));
      ++out.failed_cells;
      continue;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = values.size() > 1
                          ? std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                                std::sqrt(static_cast<double>(values.size()))
                          : 0.0;
    prefix.insert(prefix.end(), {num(mean), num(se), ""});
    table.add_row(std::move(prefix));
  }
  out.tables.push_back({"variance_scaling.csv", std::move(table)});
  return out;
}

ExperimentOutput run_optimality_gap(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.candidate_source == CandidateSource::kGaussian,
          "the optimality gap compares against Gaussian candidates");
  const auto cells = grid_cells(cfg);
  const std::vector<std::string> columns{
      "d", "n", "p", "noise_var", "j_count", "scaled_logL_conjectured",
      "scaled_logL_empirical_max", "gap", "scaled_logL_bound", "bound_minus_conjectured", "error"};
  std::vector<std::vector<std::string>> rows(cells.size());
  std::vector<int> failed(cells.size(), 0);

  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const auto& c = cells[i];
    std::vector<std::string> prefix{num(c.d), num(c.n), num(c.p), num(c.noise_var),
                                    num(cfg.j_count)};
    try {
      const Dataset data = cell_dataset(cfg, c);
      const auto shape = NetworkShape::two_layer(c.d, c.p);
      const GaussianPriorSpec prior{cfg.variance_scale};
      const auto seed = candidate_seed(cfg, c.d, c.p);
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < cfg.j_count; ++j) {
        const auto theta = gaussian_candidate(shape, j, cfg.j_count, prior, seed);
        const auto features = forward_features(theta, data.x1(), shape);
        best = std::max(best, BlrSystem(features.xl, c.noise_var).log_marginal(data.y()));
      }
      const auto target = projected_optimal_gram(data.x1(), data.y(), c.noise_var);
      const auto features = factor_gram_nonneg(target, c.p);
      const double conjectured =
          log_marginal_likelihood_spectral(features.xl, data.y(), c.noise_var) / c.n;
      const double bound = optimal_log_marginal(data.y(), c.noise_var) / c.n;
      const double empirical = best / c.n;
      prefix.insert(prefix.end(), {num(conjectured), num(empirical), num(conjectured - empirical),
                                   num(bound), num(bound - conjectured), ""});
      rows[i] = std::move(prefix);
    } catch (const std::exception& e) {
      rows[i] = failure_row(std::move(prefix), columns.size(), e.what());
      failed[i] = 1;
    }
  });

  ExperimentOutput out{"optimality_gap", {}, 0};
  Table table{columns, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.add_row(std::move(rows[i]));
    out.failed_cells += failed[i];
  }
  out.tables.push_back({"optimality_gap.csv", std::move(table)});
  return out;
}

ExperimentOutput run_prior_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  const GridCell c = grid_cells(cfg).front();
  const Dataset data = cell_dataset(cfg, c);
  const auto shape = NetworkShape::two_layer(c.d, c.p);
  const auto candidates = build_equivalence_class(data, shape, cfg.equivalence_spec(),
                                                  candidate_seed(cfg, c.d, c.p, c.n));

  std::vector<double> theta_built;
  std::vector<double> w_built;
  theta_built.reserve(candidates.size() * static_cast<std::size_t>(c.d * c.p));
  std::vector<std::vector<double>> w_per_candidate(candidates.size());
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t j) {
    const auto features = forward_features(candidates[j], data.x1(), shape);
    const Vector w = BlrSystem(features.xl, c.noise_var).weight_mean(data.y());
    w_per_candidate[j].assign(w.data(), w.data() + w.size());
  });
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const Matrix& theta = candidates[j].layers()[0].weights;
    theta_built.insert(theta_built.end(), theta.data(), theta.data() + theta.size());
    w_built.insert(w_built.end(), w_per_candidate[j].begin(), w_per_candidate[j].end());
  }

  auto rng = RngPolicy(cfg.seed).stream(key({std::uint64_t(c.d), std::uint64_t(c.p)}),
                                        StreamTag::kPriorDraws);
  std::normal_distribution<double> theta_prior(0.0, std::sqrt(cfg.variance_scale / c.d));
  std::normal_distribution<double> w_prior(0.0, std::sqrt(1.0 / c.p));
  std::vector<double> theta_drawn(theta_built.size());
  for (auto& v : theta_drawn) v = theta_prior(rng);
  std::vector<double> w_drawn(w_built.size());
  for (auto& v : w_drawn) v = w_prior(rng);

  ExperimentOutput out{"prior_comparison", {}, 0};
  out.tables.push_back(
      {"prior_comparison_theta.csv",
       histogram_table(paired_histogram(theta_built, theta_drawn, cfg.histogram_bins),
                       "constructed_density", "prior_density")});
  out.tables.push_back(
      {"prior_comparison_w.csv",
       histogram_table(paired_histogram(w_built, w_drawn, cfg.histogram_bins),
                       "constructed_density", "prior_density")});
  Table summary{{"parameter", "sample_count", "constructed_sd", "prior_sd",
                 "prior_sd_expected"},
                {}};
  summary.add_row({"theta", num(int(theta_built.size())), num(population_sd(theta_built)),
                   num(population_sd(theta_drawn)), num(std::sqrt(cfg.variance_scale / c.d))});
  summary.add_row({"w", num(int(w_built.size())), num(population_sd(w_built)),
                   num(population_sd(w_drawn)), num(std::sqrt(1.0 / c.p))});
  out.tables.push_back({"prior_comparison_summary.csv", std::move(summary)});
  return out;
}

ExperimentOutput run_predict(const ExperimentConfig& cfg) {
  cfg.validate();
  const GridCell c = grid_cells(cfg).front();
  const Dataset data = cell_dataset(cfg, c);
  const auto shape = NetworkShape::two_layer(c.d, c.p);
  return run_predict(cfg, data, cell_candidates(cfg, c, data), shape);
}

ExperimentOutput run_predict(const ExperimentConfig& cfg, const Dataset& data,
                             const CandidateSet& candidates, const NetworkShape& shape) {
  cfg.validate();
  require(shape.input_dim() == data.d(), "dataset and network input dimensions differ");
  const auto tests = generate_test_points(data.d(), cfg.n_test_points, test_point_seed(cfg, data.d()));
  const auto evals = evaluate_candidates(candidates, data, tests, shape, cfg.threads);

  ExperimentOutput out{"predict", {}, 0};
  Table summary{{"test_point", "n_components", "n_significant", "n_local_modes", "mixture_mean",
                 "mixture_variance"},
                {}};
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto mix = assemble_mixture(candidates, evals, t);
    const auto moments = mixture_moments(mix);
    summary.add_row({num(int(t)), num(int(mix.size())),
                     num(significant_component_count(mix, cfg.threshold)),
                     num(local_mode_count(mix, cfg.mode_grid_points)), num(moments.mean),
                     num(moments.var)});
    out.tables.push_back({fmt::format("mixture_t{}.csv", t), mixture_table(mix)});
  }
  out.tables.insert(out.tables.begin(), NamedTable{"predict_summary.csv", std::move(summary)});
  return out;
}

ExperimentOutput run_classify(const ExperimentConfig& cfg, bool renormalize) {
  cfg.validate();
  const GridCell c = grid_cells(cfg).front();
  const Dataset inputs = cell_dataset(cfg, c);
  // Labels from a random linear teacher: argmax_k v_k^T x.
  auto rng = RngPolicy(dataset_seed(cfg, c.d, c.n)).stream(0, StreamTag::kTeacher);
  std::normal_distribution<double> normal;
  Matrix teacher(c.d, cfg.classes);
  for (Eigen::Index j = 0; j < teacher.cols(); ++j)
    for (Eigen::Index i = 0; i < teacher.rows(); ++i) teacher(i, j) = normal(rng);
  const Matrix scores = teacher.transpose() * inputs.x1();
  ClassificationData data{inputs.x1(), Matrix::Zero(c.n, cfg.classes), c.noise_var};
  for (int i = 0; i < c.n; ++i) {
    Eigen::Index best = 0;
    scores.col(i).maxCoeff(&best);
    data.y_onehot(i, best) = 1.0;
  }

  const auto shape = NetworkShape::two_layer(c.d, c.p);
  const auto candidates = sample_gaussian_candidates(
      shape, cfg.j_count, GaussianPriorSpec{cfg.variance_scale}, candidate_seed(cfg, c.d, c.p));
  const auto tests = generate_test_points(c.d, cfg.n_test_points, test_point_seed(cfg, c.d));

  ExperimentOutput out{"classify", {}, 0};
  Table probs{{"test_point", "class", "probability"}, {}};
  Table defects{{"test_point", "probability_sum", "normalization_defect"}, {}};
  MulticlassOptions options;
  options.renormalize = renormalize;
  options.threads = cfg.threads;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto p = multiclass_probs(candidates, data, tests[t], shape, options);
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      probs.add_row({num(int(t)), num(int(k)), num(p[k])});
      total += p[k];
    }
    defects.add_row({num(int(t)), num(total), num(total - 1.0)});
  }
  out.tables.push_back({"class_probs.csv", std::move(probs)});
  out.tables.push_back({"class_normalization.csv", std::move(defects)});

  if (cfg.classes == 2) {
    const Dataset binary(inputs.x1(), data.y_onehot.col(1), c.noise_var, inputs.seed(),
                         inputs.generator());
    Table table{{"test_point", "probability_class_1"}, {}};
    for (std::size_t t = 0; t < tests.size(); ++t)
      table.add_row({num(int(t)), num(binary_class_prob(candidates, binary, tests[t], shape,
                                                        cfg.threads))});
    out.tables.push_back({"binary_probs.csv", std::move(table)});
  }
  return out;
}

void write_output(const ExperimentOutput& output, const ExperimentConfig& cfg,
                  const fs::path& dir) {
  fs::create_directories(dir);
  const std::string comment =
      fmt::format("bnnmix {} config_hash={} seed={}", output.experiment, cfg.hash(), cfg.seed);
  std::vector<std::string> files;
  for (const auto& t : output.tables) {
    write_table(t.table, dir / t.file_name, comment);
    files.push_back(t.file_name);
  }
  const ordered_json meta = {
      {"experiment", output.experiment},
      {"config_hash", cfg.hash()},
      {"failed_cells", output.failed_cells},
      {"files", files},
      {"config", ordered_json::parse(cfg.to_json())},
  };
  std::ofstream out(dir / (output.experiment + ".meta.json"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metadata sidecar");
  out << meta.dump(2) << '\n';
}

}  // namespace bnnmix
