#include "bnnmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "bnnmix/features.hpp"
#include "bnnmix/parallel.hpp"

namespace bnnmix {

void MixturePredictive::validate() const {
  const std::size_t j = weights.size();
  if (j == 0 || means.size() != j || sds.size() != j)
    throw InvalidArgument("mixture needs equal, non-zero numbers of weights, means and sds");
  double total = 0.0;
  for (std::size_t i = 0; i < j; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(means[i]) || !(sds[i] > 0.0) ||
        !std::isfinite(sds[i]))
      throw InvalidArgument(fmt::format("invalid mixture component {}", i));
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidArgument(fmt::format("mixture weights sum to {:.17g}", total));
}

std::vector<double> mixture_weights(std::span<const double> log_marginals,
                                    std::span<const double> log_prior_masses) {
  if (log_marginals.empty() || log_marginals.size() != log_prior_masses.size())
    throw InvalidArgument("log marginals and prior masses must have equal non-zero length");
  const std::size_t j = log_marginals.size();
  std::vector<double> scores(j);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < j; ++i) {
    scores[i] = log_marginals[i] + log_prior_masses[i];
    if (std::isnan(scores[i]) || scores[i] == std::numeric_limits<double>::infinity())
      throw InvalidArgument(fmt::format("log weight {} is not a finite number", i));
    top = std::max(top, scores[i]);
  }
  if (top == -std::numeric_limits<double>::infinity())
    throw InvalidArgument("every candidate has zero posterior probability");

  double total = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (auto& s : scores) s /= total;
  total = 0.0;
  for (double s : scores) total += s;
  for (auto& s : scores) s /= total;
  return scores;
}

CandidateEvaluation evaluate_candidate(const ThetaCandidate& theta, const Dataset& data,
                                       const Matrix& test_inputs, const NetworkShape& shape) {
  const FeatureMatrix train = forward_features(theta, data.x1(), shape);
  const BlrSystem system(train.xl, data.noise_var());
  CandidateEvaluation eval;
  eval.log_marginal = system.log_marginal(data.y());
  if (!std::isfinite(eval.log_marginal)) throw NumericError("non-finite log marginal likelihood");
  if (test_inputs.cols() == 0) return eval;
  const FeatureMatrix test = forward_features(theta, test_inputs, shape);
  const Vector beta = system.weight_mean(data.y());
  eval.moments.reserve(static_cast<std::size_t>(test.xl.cols()));
  for (Eigen::Index t = 0; t < test.xl.cols(); ++t) {
    const Vector x = test.xl.col(t);
    eval.moments.push_back({x.dot(beta), system.predictive_variance(x)});
  }
  return eval;
}

std::vector<CandidateEvaluation> evaluate_candidates(const CandidateSet& candidates,
                                                     const Dataset& data,
                                                     std::span<const TestPoint> tests,
                                                     const NetworkShape& shape, int threads) {
  if (data.d() != shape.input_dim())
    throw InvalidArgument(fmt::format("dataset has d = {}, network expects {}", data.d(),
                                      shape.input_dim()));
  const Matrix test_inputs = tests.empty() ? Matrix(data.d(), 0) : stack_test_points(tests);
  if (test_inputs.rows() != data.d())
    throw InvalidArgument("test point dimension does not match the dataset");

  std::vector<CandidateEvaluation> out(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t j) {
    try {
      out[j] = evaluate_candidate(candidates[j], data, test_inputs, shape);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("candidate {}: {}", j, e.what()));
    }
  });
  return out;
}

MixturePredictive assemble_mixture(const CandidateSet& candidates,
                                   std::span<const CandidateEvaluation> evaluations,
                                   std::size_t test_index) {
  if (evaluations.size() != candidates.size())
    throw InvalidArgument("one evaluation per candidate is required");
  std::vector<double> log_marginals;
  log_marginals.reserve(evaluations.size());
  MixturePredictive mix;
  for (const auto& e : evaluations) {
    if (test_index >= e.moments.size()) throw InvalidArgument("test index out of range");
    log_marginals.push_back(e.log_marginal);
    mix.means.push_back(e.moments[test_index].mean);
    mix.sds.push_back(std::sqrt(e.moments[test_index].var));
  }
  const auto masses = candidates.log_prior_masses();
  mix.weights = mixture_weights(log_marginals, masses);
  mix.test_point_index = static_cast<int>(test_index);
  return mix;
}

MixturePredictive posterior_predictive(const CandidateSet& candidates, const Dataset& data,
                                       const TestPoint& test, const NetworkShape& shape,
                                       int threads) {
  const std::vector<TestPoint> tests{test};
  const auto evals = evaluate_candidates(candidates, data, tests, shape, threads);
  auto mix = assemble_mixture(candidates, evals, 0);
  mix.test_point_index.reset();
  return mix;
}

std::vector<double> pdf_eval(const MixturePredictive& mix, std::span<const double> grid) {
  mix.validate();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!std::isfinite(grid[g])) throw InvalidArgument("grid must be finite");
    if (g > 0 && grid[g] < grid[g - 1]) throw InvalidArgument("grid must be sorted ascending");
  }
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  std::vector<double> density(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t j = 0; j < mix.size(); ++j) {
      if (mix.weights[j] == 0.0) continue;
      const double z = (grid[g] - mix.means[j]) / mix.sds[j];
      total += mix.weights[j] * inv_sqrt_2pi / mix.sds[j] * std::exp(-0.5 * z * z);
    }
    density[g] = total;
  }
  return density;
}

int significant_component_count(const MixturePredictive& mix, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw InvalidArgument("threshold must lie in (0, 1)");
  return static_cast<int>(
      std::count_if(mix.weights.begin(), mix.weights.end(), [&](double w) { return w > threshold; }));
}

std::vector<double> mixture_grid(const MixturePredictive& mix, int grid_points) {
  if (grid_points < 3) throw InvalidArgument("grid needs at least 3 points");
  mix.validate();
  const auto [lo_mean, hi_mean] = std::minmax_element(mix.means.begin(), mix.means.end());
  const double max_sd = *std::max_element(mix.sds.begin(), mix.sds.end());
  const double lo = *lo_mean - 5.0 * max_sd;
  const double hi = *hi_mean + 5.0 * max_sd;
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  const double step = (hi - lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) grid[static_cast<std::size_t>(i)] = lo + step * i;
  grid.back() = hi;
  return grid;
}

int local_mode_count(const MixturePredictive& mix, int grid_points) {
  const auto grid = mixture_grid(mix, grid_points);
  const auto density = pdf_eval(mix, grid);
  // Collapse flat runs, then count strict interior maxima.
  std::vector<double> runs;
  runs.reserve(density.size());
  for (double v : density)
    if (runs.empty() || v != runs.back()) runs.push_back(v);
  int modes = 0;
  for (std::size_t i = 1; i + 1 < runs.size(); ++i)
    if (runs[i] > runs[i - 1] && runs[i] > runs[i + 1]) ++modes;
  return modes;
}

PredictiveMoments mixture_moments(const MixturePredictive& mix) {
  mix.validate();
  double mean = 0.0;
  for (std::size_t j = 0; j < mix.size(); ++j) mean += mix.weights[j] * mix.means[j];
  // Centered form of sum w (sd^2 + mean^2) - mean^2.
  double var = 0.0;
  for (std::size_t j = 0; j < mix.size(); ++j) {
    const double offset = mix.means[j] - mean;
    var += mix.weights[j] * (mix.sds[j] * mix.sds[j] + offset * offset);
  }
  return {mean, var};
}

}  // namespace bnnmix
