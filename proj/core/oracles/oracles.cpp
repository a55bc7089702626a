#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace bnnmix::oracles {

namespace {

Matrix weight_covariance(const Matrix& xl, double noise_var) {
  const auto p = static_cast<double>(xl.rows());
  const Matrix precision = p * Matrix::Identity(xl.rows(), xl.rows()) +
                           xl * xl.transpose() / noise_var;
  return precision.fullPivLu().inverse();
}

McEstimate summarize(const std::vector<double>& draws) {
  const auto m = static_cast<double>(draws.size());
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= m;
  double m2 = 0.0, m4 = 0.0;
  for (double v : draws) {
    const double c = (v - mean) * (v - mean);
    m2 += c;
    m4 += c * c;
  }
  const double var = m2 / (m - 1.0);
  const double mu4 = m4 / m;
  McEstimate e;
  e.mean = mean;
  e.var = var;
  e.mean_se = std::sqrt(var / m);
  e.var_se = std::sqrt(std::max(mu4 - var * var, 0.0) / m);
  return e;
}

}  // namespace

Moments predictive_explicit(const Matrix& xl, const Vector& xl_test, const Vector& y,
                            double noise_var) {
  const Matrix cov = weight_covariance(xl, noise_var);
  const Vector w = cov * xl * y / noise_var;
  return {xl_test.dot(w), noise_var + xl_test.dot(cov * xl_test)};
}

double log_marginal_explicit(const Matrix& xl, const Vector& y, double noise_var) {
  const auto n = xl.cols();
  const Matrix k = xl.transpose() * xl / static_cast<double>(xl.rows()) +
                   noise_var * Matrix::Identity(n, n);
  const auto lu = k.fullPivLu();
  double logdet = 0.0;
  const Matrix u = lu.matrixLU();
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(std::abs(u(i, i)));
  const double quad = y.dot(lu.inverse() * y);
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

double optimal_log_marginal_closed_form(const Vector& y, double noise_var) {
  const auto n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(y.squaredNorm()) + 1.0 +
                 (n - 1.0) * std::log(noise_var));
}

Matrix relu_features_loop(const Matrix& weights, const Vector& bias, const Matrix& inputs) {
  Matrix out(weights.cols(), inputs.cols());
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    for (Eigen::Index k = 0; k < weights.cols(); ++k) {
      double s = -bias(k);
      for (Eigen::Index r = 0; r < weights.rows(); ++r) s += weights(r, k) * inputs(r, i);
      out(k, i) = s > 0.0 ? s : 0.0;
    }
  }
  return out;
}

std::vector<double> softmax_direct(const std::vector<double>& log_weights) {
  long double total = 0.0L;
  std::vector<long double> e(log_weights.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    e[j] = std::exp(static_cast<long double>(log_weights[j]));
    total += e[j];
  }
  std::vector<double> w(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) w[j] = static_cast<double>(e[j] / total);
  return w;
}

Matrix random_psd_with_trace(int n, double trace, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> rank_dist(1, n);
  const int rank = rank_dist(rng);
  Matrix g(n, rank);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  Matrix a = g * g.transpose();
  a *= trace / a.trace();
  return 0.5 * (a + a.transpose());
}

McEstimate mixture_moments_mc(const std::vector<double>& weights, const std::vector<double>& means,
                              const std::vector<double>& sds, int samples, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  std::vector<double> draws(static_cast<std::size_t>(samples));
  for (auto& v : draws) {
    const auto j = pick(rng);
    v = means[j] + sds[j] * normal(rng);
  }
  return summarize(draws);
}

McEstimate relu_variance_mc(double scale, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(scale));
  std::vector<double> draws(static_cast<std::size_t>(samples));
  for (auto& v : draws) v = std::max(normal(rng), 0.0);
  return summarize(draws);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

double mixture_pdf(const std::vector<double>& weights, const std::vector<double>& means,
                   const std::vector<double>& sds, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double z = (x - means[j]) / sds[j];
    s += weights[j] * std::exp(-0.5 * z * z) / (sds[j] * std::sqrt(2.0 * std::numbers::pi));
  }
  return s;
}

McEstimate posterior_sigmoid_mc(const Matrix& xl, const Vector& xl_test, const Vector& y,
                                double noise_var, int samples, std::mt19937_64& rng) {
  const Matrix cov = weight_covariance(xl, noise_var);
  const Vector mean = cov * xl * y / noise_var;
  const double m = xl_test.dot(mean);
  const double s = std::sqrt(std::max(xl_test.dot(cov * xl_test), 0.0));
  // w^T x is Gaussian, so sampling the scalar is equivalent to sampling w.
  std::normal_distribution<double> normal;
  std::vector<double> draws(static_cast<std::size_t>(samples));
  for (auto& v : draws) v = 1.0 / (1.0 + std::exp(-(m + s * normal(rng))));
  return summarize(draws);
}

McEstimate probit_integral_mc(double mean, double var, int samples, std::mt19937_64& rng) {
  const double a = std::sqrt(std::numbers::pi / 8.0);
  std::normal_distribution<double> normal(mean, std::sqrt(var));
  std::vector<double> draws(static_cast<std::size_t>(samples));
  for (auto& v : draws) v = 0.5 * std::erfc(-a * normal(rng) / std::sqrt(2.0));
  return summarize(draws);
}

std::pair<double, double> two_component_weights(double log_l0, double log_l1, double log_rho0,
                                                double log_rho1) {
  const double w0 = 1.0 / (1.0 + std::exp(log_l1 + log_rho1 - log_l0 - log_rho0));
  return {w0, 1.0 - w0};
}

}  // namespace bnnmix::oracles
