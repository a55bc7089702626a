#pragma once

#include <vector>

#include "bnnmix/core.hpp"

namespace bnnmix {

struct PredictiveMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// Per-candidate predictive moments at one test point and the candidate's
/// log marginal likelihood.
struct ComponentPosterior {
  double pred_mean = 0.0;
  double pred_var = 0.0;
  double log_marginal = 0.0;
  int candidate_index = 0;
};

/// Gaussian posterior over final-layer weights w ~ N(0, I/p).
struct FinalLayerPosterior {
  Vector mean;
  Matrix covariance;
};

/// Conjugate regression on the features of one candidate with a single
/// Cholesky factorization, on the n x n system when n <= p and on the
/// p x p system otherwise. Several targets or test columns can reuse it.
class BlrSystem {
 public:
  enum class Form { kSampleSpace, kFeatureSpace };

  BlrSystem(const Matrix& xl_train, double noise_var);

  Form form() const { return form_; }
  int n() const { return n_; }
  int p() const { return p_; }
  double noise_var() const { return noise_var_; }

  /// log N(y; 0, X^T X / p + noise I).
  double log_marginal(const Vector& y) const;

  /// Posterior mean of the final-layer weights; the predictive mean at x is x^T beta.
  Vector weight_mean(const Vector& y) const;

  /// noise + noise/p * x^T (X X^T / p + noise I)^-1 x.
  double predictive_variance(const Vector& xl_test) const;

  PredictiveMoments predict(const Vector& xl_test, const Vector& y) const;

 private:
  Matrix xl_;
  double noise_var_;
  int n_;
  int p_;
  Form form_;
  Eigen::LLT<Matrix> llt_;
};

/// Predictive moments for one candidate, choosing the cheaper system.
PredictiveMoments component_predictive(const Matrix& xl_train, const Vector& xl_test,
                                       const Vector& y, double noise_var);

/// Predictive moments solved on the n x n system.
PredictiveMoments component_predictive_sample_space(const Matrix& xl_train, const Vector& xl_test,
                                                    const Vector& y, double noise_var);

/// Predictive moments solved on the p x p system.
PredictiveMoments component_predictive_feature_space(const Matrix& xl_train,
                                                     const Vector& xl_test, const Vector& y,
                                                     double noise_var);

FinalLayerPosterior final_layer_posterior(const Matrix& xl_train, const Vector& y,
                                          double noise_var);

/// Dense log marginal likelihood through a Cholesky factor of the n x n covariance.
double log_marginal_likelihood(const Matrix& xl_train, const Vector& y, double noise_var);

/// Per-direction terms log(lambda_k + noise) + (q_k^T y)^2 / (lambda_k + noise)
/// from the SVD of X / sqrt(p); lambda_k = 0 past the rank. Each term is >= log(noise).
std::vector<double> spectral_terms(const Matrix& xl_train, const Vector& y, double noise_var);

/// Same value as log_marginal_likelihood, assembled from spectral_terms.
double log_marginal_likelihood_spectral(const Matrix& xl_train, const Vector& y,
                                        double noise_var);

/// Spectral log marginal likelihood for a normalized Gram G = X^T X / p given directly.
double log_marginal_from_gram(const Matrix& gram, const Vector& y, double noise_var);

/// Value at the unconstrained optimum G = y y^T (1 - noise / y^T y):
/// -(n log 2pi + log(y^T y) + 1 + (n - 1) log noise) / 2.
double optimal_log_marginal(const Vector& y, double noise_var);

/// -(n/2) log 2pi - n log(noise)/2, which no feature matrix can exceed.
double log_marginal_upper_bound(int n, double noise_var);

}  // namespace bnnmix
