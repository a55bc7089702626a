#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bnnmix/blr.hpp"
#include "bnnmix/core.hpp"

namespace bnnmix {

inline constexpr double kDefaultSignificanceThreshold = 1e-6;

/// J-component Gaussian mixture over the prediction at one test point.
struct MixturePredictive {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;
  std::optional<int> test_point_index;

  std::size_t size() const { return weights.size(); }
  /// Throws InvalidArgument on length mismatch, negative weights, bad
  /// normalization or non-positive sds.
  void validate() const;
};

/// Softmax of log prior mass + log marginal likelihood, shifted by the maximum.
std::vector<double> mixture_weights(std::span<const double> log_marginals,
                                    std::span<const double> log_prior_masses);

/// Everything computed for each candidate: its log marginal likelihood and
/// predictive moments at each requested test point.
struct CandidateEvaluation {
  double log_marginal = 0.0;
  std::vector<PredictiveMoments> moments;  // one per test point
};

/// Features, factorization, marginal likelihood and test-point moments for one
/// candidate; `test_inputs` holds test points as columns.
CandidateEvaluation evaluate_candidate(const ThetaCandidate& theta, const Dataset& data,
                                       const Matrix& test_inputs, const NetworkShape& shape);

/// Evaluates every candidate against the training data and the test points.
/// Candidates may be spread over `threads` workers; results are stored by
/// candidate index. NumericError messages carry the failing candidate index.
std::vector<CandidateEvaluation> evaluate_candidates(const CandidateSet& candidates,
                                                     const Dataset& data,
                                                     std::span<const TestPoint> tests,
                                                     const NetworkShape& shape, int threads = 1);

/// Assembles the mixture for test point `test_index` from evaluated candidates.
MixturePredictive assemble_mixture(const CandidateSet& candidates,
                                   std::span<const CandidateEvaluation> evaluations,
                                   std::size_t test_index);

MixturePredictive posterior_predictive(const CandidateSet& candidates, const Dataset& data,
                                       const TestPoint& test, const NetworkShape& shape,
                                       int threads = 1);

/// Pointwise mixture density on an ascending finite grid.
std::vector<double> pdf_eval(const MixturePredictive& mix, std::span<const double> grid);

/// Number of components whose weight exceeds `threshold`.
int significant_component_count(const MixturePredictive& mix,
                                double threshold = kDefaultSignificanceThreshold);

/// Uniform grid over [min mean - 5 max sd, max mean + 5 max sd].
std::vector<double> mixture_grid(const MixturePredictive& mix, int grid_points);

/// Interior local maxima of the density on mixture_grid; a flat run of equal
/// values counts once.
int local_mode_count(const MixturePredictive& mix, int grid_points = 2001);

/// Mean and law-of-total-variance variance.
PredictiveMoments mixture_moments(const MixturePredictive& mix);

}  // namespace bnnmix
