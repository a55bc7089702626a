#pragma once

#include <vector>

#include "bnnmix/core.hpp"

namespace bnnmix {

/// Inputs with one-hot labels (n x K); the same observation noise is used for
/// every class column.
struct ClassificationData {
  Matrix x1;
  Matrix y_onehot;
  double noise_var = 0.01;

  int classes() const { return static_cast<int>(y_onehot.cols()); }
  void validate() const;
};

/// Joint Gaussian over the K logits w_k^T x at one test point under one
/// candidate's final-layer posterior.
struct LogitPosterior {
  Vector mean;
  Matrix covariance;
};

double logistic(double x);

/// E[sigmoid(X)] for X ~ N(mean, var) via sigmoid(x) ~ Phi(sqrt(pi/8) x):
/// Phi(mean / sqrt(8/pi + var)). Returns sigmoid(mean) when var == 0.
double probit_sigmoid_expectation(double mean, double var);

/// E[sigmoid(X)] by 64-node Gauss-Hermite quadrature.
double gauss_hermite_sigmoid_expectation(double mean, double var);

/// P(y = 1 | x) for 0/1 targets: posterior-weighted Phi(mu_j / sqrt(8/pi + var_j))
/// with the regression predictive moments of each candidate.
double binary_class_prob(const CandidateSet& candidates, const Dataset& data,
                         const TestPoint& test, const NetworkShape& shape, int threads = 1);

/// Posterior over the logits of one candidate for every class column.
LogitPosterior logit_posterior(const Matrix& xl_train, const Vector& xl_test,
                               const Matrix& y_onehot, double noise_var);

/// (2 - K + sum_{r != k} 1 / E[sigmoid(l_k - l_r)])^-1 for one logit posterior.
double mean_field_class_prob(const LogitPosterior& logits, int k, bool use_quadrature = false);

struct MulticlassOptions {
  bool renormalize = false;
  bool use_quadrature = false;
  int threads = 1;
};

/// Mean-field class probabilities for all K classes, mixing candidates with
/// weights from the product of per-class marginal likelihoods.
std::vector<double> multiclass_probs(const CandidateSet& candidates, const ClassificationData& data,
                                     const TestPoint& test, const NetworkShape& shape,
                                     const MulticlassOptions& options = {});

double multiclass_prob(const CandidateSet& candidates, const ClassificationData& data,
                       const TestPoint& test, const NetworkShape& shape, int k,
                       const MulticlassOptions& options = {});

}  // namespace bnnmix
