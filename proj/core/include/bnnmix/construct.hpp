#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "bnnmix/core.hpp"
#include "bnnmix/features.hpp"

namespace bnnmix {

/// c = 2 pi / (pi - 1): a ReLU of a N(0, c) pre-activation has unit variance.
inline constexpr double kReluUnitVarianceScale = 2.0 * std::numbers::pi / (std::numbers::pi - 1.0);

/// Entries of a layer with input width d_in are drawn from N(0, c / d_in).
struct GaussianPriorSpec {
  double variance_scale = kReluUnitVarianceScale;
};

enum class GramKind { kUnconstrained, kRelu, kProjectedRelu };

/// Target for the normalized Gram X_L^T X_L / p, i.e. the matrix added to
/// noise * I in the marginal-likelihood covariance.
struct GramTarget {
  Matrix gram;          // n x n
  double scale_factor;  // 1 - noise / y^T y
  Vector direction;     // y, or its projection onto col(X1)
  GramKind kind;
};

struct EquivalenceClassSpec {
  int n_rotations = 10;
  int n_preimage = 10;
  int n_colspace = 10;
  double preimage_scale = std::sqrt(kReluUnitVarianceScale);
  double colspace_scale = std::sqrt(kReluUnitVarianceScale);
  int givens_per_rotation = 8;

  std::size_t total() const {
    return static_cast<std::size_t>(n_rotations) * n_preimage * n_colspace;
  }
  void validate() const;
};

/// J candidates with zero biases and uniform prior mass 1/J. Candidate j only
/// depends on (seed, j).
CandidateSet sample_gaussian_candidates(const NetworkShape& shape, int j_count,
                                        const GaussianPriorSpec& prior, std::uint64_t seed);

/// Candidate j of sample_gaussian_candidates(shape, j_count, prior, seed), built alone.
ThetaCandidate gaussian_candidate(const NetworkShape& shape, int j, int j_count,
                                  const GaussianPriorSpec& prior, std::uint64_t seed);

/// Unconstrained maximizer y y^T (1 - noise / y^T y). Requires y^T y > noise.
GramTarget optimal_gram(const Vector& y, double noise_var);

/// relu(y y^T) (1 - noise / y^T y), formed as relu(y) relu(y)^T + relu(-y) relu(-y)^T.
GramTarget relu_optimal_gram(const Vector& y, double noise_var);

/// relu(P y y^T P) (1 - noise / y^T y) with P = row_space_projector(x1).
GramTarget projected_optimal_gram(const Matrix& x1, const Vector& y, double noise_var);

/// n x n orthogonal projector onto range(x1^T), the subspace of R^n reachable
/// as a row of W^T x1. Rank is cut at 1e-10 times the largest singular value.
Matrix row_space_projector(const Matrix& x1);

/// Nonnegative p x n features with X^T X / p = target.gram: row 0 holds
/// sqrt(p s) relu(direction), row 1 holds sqrt(p s) relu(-direction), rest zero.
FeatureMatrix factor_gram_nonneg(const GramTarget& target, int p);

/// Rotates row `active` into the all-zero row `slack` by `angle` in [0, pi/2]:
/// active <- cos(angle) * active, slack <- sin(angle) * active.
void apply_slack_rotation(Matrix& xl, Eigen::Index active, Eigen::Index slack, double angle);

/// Samples of nonnegative features with the same Gram as `xl`, each a
/// composition of `givens_per_sample` plane rotations into currently-zero rows.
std::vector<FeatureMatrix> rotate_features(const FeatureMatrix& xl, int n_samples,
                                           std::uint64_t seed, int givens_per_sample = 8);

/// Pre-activations z with relu(z) == xl: z = xl where positive, -|N(0, scale^2)| where zero.
std::vector<Matrix> sample_preimage(const Matrix& xl, int n_samples, double scale,
                                    std::uint64_t seed);

/// Solves theta^T x1 = z for first-layer weights theta (d x p) when x1 has full
/// column rank. Factorizes x1 once; each sample adds the projection of a
/// N(0, scale^2 / d) matrix onto the orthogonal complement of col(x1).
class ColumnSpaceSolver {
 public:
  explicit ColumnSpaceSolver(const Matrix& x1);

  int d() const { return d_; }
  int n() const { return n_; }

  /// Minimum-norm solution of theta^T x1 = z.
  Matrix minimum_norm(const Matrix& z) const;

  /// Adds `perturbation` projected onto the complement of col(x1).
  Matrix add_complement(Matrix theta, const Matrix& perturbation) const;

  std::vector<ThetaCandidate> sample(const Matrix& z, int n_samples, double scale,
                                     std::uint64_t seed) const;

 private:
  int d_;
  int n_;
  Matrix q_;  // d x n orthonormal basis of col(x1)
  Matrix r_;  // n x n upper triangular
  Eigen::ColPivHouseholderQR<Matrix>::PermutationType perm_;
};

std::vector<ThetaCandidate> sample_colspace_theta(const Matrix& x1, const Matrix& z,
                                                  int n_samples, double scale,
                                                  std::uint64_t seed);

/// Candidates with identical Gram (hence identical marginal likelihood): the
/// Cartesian product of rotations, preimage samples and column-space samples of
/// the factored conjectured optimum. Index = (rotation * n_preimage + preimage) * n_colspace + colspace.
CandidateSet build_equivalence_class(const Dataset& data, const NetworkShape& shape,
                                     const EquivalenceClassSpec& spec, std::uint64_t seed);

}  // namespace bnnmix
