#pragma once

// Reference implementations used by tests, the acceptance gate and the CLI
// selftest. They trade speed for directness: explicit inverses, plain loops
// and Monte Carlo, with no code shared with the library's numerical paths.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace bnnmix::oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

/// Predictive moments through the explicit weight posterior
/// cov = (p I + X X^T / noise)^-1, mean = cov X y / noise.
Moments predictive_explicit(const Matrix& xl, const Vector& xl_test, const Vector& y,
                            double noise_var);

/// log N(y; 0, X^T X / p + noise I) with an explicit inverse and LU determinant.
double log_marginal_explicit(const Matrix& xl, const Vector& y, double noise_var);

/// Closed-form log-marginal at the optimal Gram y y^T (1 - noise / y^T y).
double optimal_log_marginal_closed_form(const Vector& y, double noise_var);

/// relu(W^T x - b) with explicit loops, one column per input.
Matrix relu_features_loop(const Matrix& weights, const Vector& bias, const Matrix& inputs);

/// Weights exp(a_j) / sum exp(a_k) in long double without shifting.
std::vector<double> softmax_direct(const std::vector<double>& log_weights);

/// Random PSD n x n matrix with the given trace.
Matrix random_psd_with_trace(int n, double trace, std::mt19937_64& rng);

struct McEstimate {
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};

/// Moments of a Gaussian mixture by sampling.
McEstimate mixture_moments_mc(const std::vector<double>& weights, const std::vector<double>& means,
                              const std::vector<double>& sds, int samples, std::mt19937_64& rng);

/// Variance of relu(z), z ~ N(0, scale), by sampling.
McEstimate relu_variance_mc(double scale, int samples, std::mt19937_64& rng);

/// Trapezoid integral of a density sampled on an increasing grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& f);

/// Mixture density by direct summation.
double mixture_pdf(const std::vector<double>& weights, const std::vector<double>& means,
                   const std::vector<double>& sds, double x);

/// E[sigmoid(w^T x)] with w drawn from the explicit weight posterior.
McEstimate posterior_sigmoid_mc(const Matrix& xl, const Vector& xl_test, const Vector& y,
                                double noise_var, int samples, std::mt19937_64& rng);

/// E[Phi(sqrt(pi/8) f)] for f ~ N(mean, var), by sampling f.
McEstimate probit_integral_mc(double mean, double var, int samples, std::mt19937_64& rng);

/// Mixture weights for two candidates by the explicit two-term formula.
std::pair<double, double> two_component_weights(double log_l0, double log_l1, double log_rho0,
                                                double log_rho1);

}  // namespace bnnmix::oracles
