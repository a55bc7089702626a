#include "bnnmix/classify.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "bnnmix/blr.hpp"
#include "bnnmix/features.hpp"
#include "bnnmix/mixture.hpp"
#include "bnnmix/parallel.hpp"

namespace bnnmix {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct HermiteRule {
  Vector nodes;
  Vector weights;
};

// Golub-Welsch for the weight exp(-x^2).
HermiteRule make_hermite_rule(int count) {
  Matrix jacobi = Matrix::Zero(count, count);
  for (int i = 1; i < count; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  HermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

const HermiteRule& hermite64() {
  static const HermiteRule rule = make_hermite_rule(64);
  return rule;
}

}  // namespace

void ClassificationData::validate() const {
  require(x1.cols() >= 1 && x1.rows() >= 1, "classification inputs must be non-empty");
  require(y_onehot.rows() == x1.cols(), "one label row per training input is required");
  require(y_onehot.cols() >= 2, "need at least two classes");
  require(noise_var > 0.0, "noise_var must be positive");
  for (Eigen::Index i = 0; i < y_onehot.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < y_onehot.cols(); ++k) {
      const double v = y_onehot(i, k);
      require(v == 0.0 || v == 1.0, "labels must be one-hot");
      total += v;
    }
    require(total == 1.0, "each label row must contain exactly one 1");
  }
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double probit_sigmoid_expectation(double mean, double var) {
  if (!(var >= 0.0)) throw InvalidArgument("variance must be nonnegative");
  if (var == 0.0) return logistic(mean);
  return normal_cdf(mean / std::sqrt(8.0 / std::numbers::pi + var));
}

double gauss_hermite_sigmoid_expectation(double mean, double var) {
  if (!(var >= 0.0)) throw InvalidArgument("variance must be nonnegative");
  if (var == 0.0) return logistic(mean);
  const auto& rule = hermite64();
  const double spread = std::sqrt(2.0 * var);
  double total = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
    total += rule.weights(i) * logistic(mean + spread * rule.nodes(i));
  return total / std::sqrt(std::numbers::pi);
}

double binary_class_prob(const CandidateSet& candidates, const Dataset& data,
                         const TestPoint& test, const NetworkShape& shape, int threads) {
  for (Eigen::Index i = 0; i < data.y().size(); ++i) {
    const double v = data.y()(i);
    if (v != 0.0 && v != 1.0) throw InvalidArgument("binary targets must be 0 or 1");
  }
  const std::vector<TestPoint> tests{test};
  const auto evals = evaluate_candidates(candidates, data, tests, shape, threads);
  const auto mix = assemble_mixture(candidates, evals, 0);
  const double floor = 8.0 / std::numbers::pi;
  double prob = 0.0;
  for (std::size_t j = 0; j < mix.size(); ++j) {
    const double var = mix.sds[j] * mix.sds[j];
    prob += mix.weights[j] * normal_cdf(mix.means[j] / std::sqrt(floor + var));
  }
  return prob;
}

LogitPosterior logit_posterior(const Matrix& xl_train, const Vector& xl_test,
                               const Matrix& y_onehot, double noise_var) {
  const BlrSystem system(xl_train, noise_var);
  const auto classes = y_onehot.cols();
  LogitPosterior out;
  out.mean.resize(classes);
  for (Eigen::Index k = 0; k < classes; ++k)
    out.mean(k) = xl_test.dot(system.weight_mean(y_onehot.col(k)));
  // Columns of w share one posterior covariance and are independent a posteriori.
  const double latent = system.predictive_variance(xl_test) - noise_var;
  out.covariance = std::max(latent, 0.0) * Matrix::Identity(classes, classes);
  return out;
}

double mean_field_class_prob(const LogitPosterior& logits, int k, bool use_quadrature) {
  const auto classes = static_cast<int>(logits.mean.size());
  require(k >= 0 && k < classes, "class index out of range");
  double total = 2.0 - classes;
  for (int r = 0; r < classes; ++r) {
    if (r == k) continue;
    const double mean = logits.mean(k) - logits.mean(r);
    const double var = std::max(
        logits.covariance(k, k) + logits.covariance(r, r) - 2.0 * logits.covariance(k, r), 0.0);
    const double expectation = use_quadrature ? gauss_hermite_sigmoid_expectation(mean, var)
                                              : probit_sigmoid_expectation(mean, var);
    total += 1.0 / expectation;
  }
  return 1.0 / total;
}

std::vector<double> multiclass_probs(const CandidateSet& candidates, const ClassificationData& data,
                                     const TestPoint& test, const NetworkShape& shape,
                                     const MulticlassOptions& options) {
  data.validate();
  require(test.x1_tilde.size() == data.x1.rows(), "test point dimension does not match");
  const int classes = data.classes();
  const Matrix test_input = test.x1_tilde;

  struct PerCandidate {
    double log_marginal = 0.0;
    std::vector<double> probs;
  };
  std::vector<PerCandidate> results(candidates.size());
  parallel_for(candidates.size(), options.threads, [&](std::size_t j) {
    try {
      const auto train = forward_features(candidates[j], data.x1, shape);
      const auto tilde = forward_features(candidates[j], test_input, shape);
      const BlrSystem system(train.xl, data.noise_var);
      PerCandidate r;
      for (int k = 0; k < classes; ++k) r.log_marginal += system.log_marginal(data.y_onehot.col(k));
      const auto logits = logit_posterior(train.xl, tilde.xl.col(0), data.y_onehot, data.noise_var);
      r.probs.resize(static_cast<std::size_t>(classes));
      for (int k = 0; k < classes; ++k)
        r.probs[static_cast<std::size_t>(k)] = mean_field_class_prob(logits, k, options.use_quadrature);
      results[j] = std::move(r);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("candidate {}: {}", j, e.what()));
    }
  });

  std::vector<double> log_marginals;
  log_marginals.reserve(results.size());
  for (const auto& r : results) log_marginals.push_back(r.log_marginal);
  const auto weights = mixture_weights(log_marginals, candidates.log_prior_masses());
  std::vector<double> probs(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t j = 0; j < results.size(); ++j)
    for (int k = 0; k < classes; ++k)
      probs[static_cast<std::size_t>(k)] += weights[j] * results[j].probs[static_cast<std::size_t>(k)];
  if (options.renormalize) {
    double total = 0.0;
    for (double v : probs) total += v;
    for (auto& v : probs) v /= total;
  }
  return probs;
}

double multiclass_prob(const CandidateSet& candidates, const ClassificationData& data,
                       const TestPoint& test, const NetworkShape& shape, int k,
                       const MulticlassOptions& options) {
  require(k >= 0 && k < data.classes(), "class index out of range");
  return multiclass_probs(candidates, data, test, shape, options)[static_cast<std::size_t>(k)];
}

}  // namespace bnnmix
