#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bnnmix/construct.hpp"
#include "bnnmix/core.hpp"
#include "bnnmix/io.hpp"

namespace bnnmix {

enum class CandidateSource { kGaussian, kEquivalenceClass };

std::string_view to_string(CandidateSource s);
CandidateSource candidate_source_from_string(std::string_view name);

/// Experiment grid and run parameters. Cells are d x (n/d) x (p/d) x noise;
/// n and p are rounded to the nearest integer (at least 1).
struct ExperimentConfig {
  std::vector<int> d_list{10, 50, 100};
  std::vector<double> n_over_d{0.5, 0.8, 1.0, 1.2, 1.5, 2.0};
  std::vector<double> p_over_d{0.5, 0.8, 1.0, 1.2, 1.5, 2.0};
  std::vector<double> p_over_n{1.0, 1.5, 2.0, 2.4};  // variance scaling only
  int j_count = 2000;
  std::vector<double> noise_var_list{0.01};
  double threshold = 1e-6;
  int n_test_points = 1;
  int n_y_realizations = 10;
  std::uint64_t seed = 0;
  CandidateSource candidate_source = CandidateSource::kGaussian;
  std::optional<EquivalenceClassSpec> class_spec;
  std::string output_dir = "out";
  TargetGenerator generator = TargetGenerator::kStandardGaussianY;
  double variance_scale = kReluUnitVarianceScale;
  int grid_points = 1001;
  int mode_grid_points = 2001;
  int histogram_bins = 60;
  int classes = 2;
  /// Worker threads; not part of the config hash since results do not depend on it.
  int threads = 1;

  void validate() const;
  EquivalenceClassSpec equivalence_spec() const;

  /// Parse from JSON text; absent fields keep their values in base.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_json(const std::string& text, ExperimentConfig base);
  /// Canonical JSON of every result-affecting field.
  std::string to_json() const;
  /// FNV-1a of to_json(), as 16 hex digits.
  std::string hash() const;
};

struct GridCell {
  int d = 0;
  int n = 0;
  int p = 0;
  double noise_var = 0.0;
};

/// Cells in d, n/d, p/d, noise order.
std::vector<GridCell> grid_cells(const ExperimentConfig& cfg);

int scaled_size(double ratio, int base);

/// Seeds shared by all experiments so that cells with the same (d, n) see the
/// same data, and cells with the same (d, p) the same Gaussian candidates.
std::uint64_t dataset_seed(const ExperimentConfig& cfg, int d, int n, int realization = 0);
std::uint64_t test_point_seed(const ExperimentConfig& cfg, int d, int realization = 0);
std::uint64_t candidate_seed(const ExperimentConfig& cfg, int d, int p, int n = 0,
                             int realization = 0);

struct NamedTable {
  std::string file_name;
  Table table;
};

struct ExperimentOutput {
  std::string experiment;
  std::vector<NamedTable> tables;
  int failed_cells = 0;

  const Table& table(std::string_view file_name) const;
};

/// Significant-component counts, mixture variance and log-marginal spread per cell.
ExperimentOutput run_heatmap(const ExperimentConfig& cfg);

/// Density grids and component lists for every cell and test point.
ExperimentOutput run_pdf_dump(const ExperimentConfig& cfg);

/// Median (over test points) mixture variance, averaged over target realizations,
/// for equivalence-class priors at each n/d in n_over_d and each p/n.
ExperimentOutput run_variance_scaling(const ExperimentConfig& cfg);

/// n^-1 log L at the projected conjectured Gram minus the best Gaussian candidate.
ExperimentOutput run_optimality_gap(const ExperimentConfig& cfg);

/// Histograms of constructed versus prior-drawn interior and final-layer weights.
ExperimentOutput run_prior_comparison(const ExperimentConfig& cfg);

/// Single mixture at the first grid cell, one table per test point.
ExperimentOutput run_predict(const ExperimentConfig& cfg);

/// Same as run_predict on a given dataset and candidate set.
ExperimentOutput run_predict(const ExperimentConfig& cfg, const Dataset& data,
                             const CandidateSet& candidates, const NetworkShape& shape);

/// Mean-field class probabilities (and the binary probit value when K = 2)
/// on synthetic labels from a random linear teacher.
ExperimentOutput run_classify(const ExperimentConfig& cfg, bool renormalize = false);

/// Writes every table with a "# bnnmix <experiment> config_hash=..." line and
/// a <experiment>.meta.json sidecar.
void write_output(const ExperimentOutput& output, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

}  // namespace bnnmix
