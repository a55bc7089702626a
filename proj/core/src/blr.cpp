#include "bnnmix/blr.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <fmt/format.h>

namespace bnnmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_inputs(const Matrix& xl_train, const Vector& y, double noise_var) {
  if (!(std::isfinite(noise_var) && noise_var > 0.0))
    throw InvalidArgument("noise_var must be positive");
  if (y.size() != xl_train.cols()) {
    throw InvalidArgument(fmt::format("target length {} does not match {} feature columns",
                                      y.size(), xl_train.cols()));
  }
  if (!xl_train.allFinite() || !y.allFinite())
    throw NumericError("non-finite features or targets");
}

void check_test(const Matrix& xl_train, const Vector& xl_test) {
  if (xl_test.size() != xl_train.rows()) {
    throw InvalidArgument(fmt::format("test features have length {}, expected p = {}",
                                      xl_test.size(), xl_train.rows()));
  }
  if (!xl_test.allFinite()) throw NumericError("non-finite test features");
}

Eigen::LLT<Matrix> factor(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("Cholesky factorization failed");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double sum_terms(const std::vector<double>& terms) {
  double total = 0.0;
  for (double t : terms) total += kLog2Pi + t;
  return -0.5 * total;
}

}  // namespace

BlrSystem::BlrSystem(const Matrix& xl_train, double noise_var)
    : xl_(xl_train),
      noise_var_(noise_var),
      n_(static_cast<int>(xl_train.cols())),
      p_(static_cast<int>(xl_train.rows())),
      form_(n_ <= p_ ? Form::kSampleSpace : Form::kFeatureSpace) {
  check_inputs(xl_train, Vector::Zero(n_), noise_var);
  const double inv_p = 1.0 / p_;
  if (form_ == Form::kSampleSpace) {
    Matrix a = Matrix::Identity(n_, n_) * noise_var_;
    a.selfadjointView<Eigen::Lower>().rankUpdate(xl_.transpose(), inv_p);
    llt_ = factor(a);  // LLT reads the lower triangle only
  } else {
    Matrix b = Matrix::Identity(p_, p_) * noise_var_;
    b.selfadjointView<Eigen::Lower>().rankUpdate(xl_, inv_p);
    llt_ = factor(b);
  }
}

double BlrSystem::log_marginal(const Vector& y) const {
  check_inputs(xl_, y, noise_var_);
  double logdet = 0.0;
  double quad = 0.0;
  if (form_ == Form::kSampleSpace) {
    logdet = log_det(llt_);
    quad = llt_.matrixL().solve(y).squaredNorm();
  } else {
    // det(A) = det(B) noise^(n-p);  y^T A^-1 y = (y^T y - |L_B^-1 X y|^2 / p) / noise.
    logdet = log_det(llt_) + (n_ - p_) * std::log(noise_var_);
    const Vector projected = llt_.matrixL().solve(xl_ * y);
    quad = (y.squaredNorm() - projected.squaredNorm() / p_) / noise_var_;
  }
  return -0.5 * (n_ * kLog2Pi + logdet + quad);
}

Vector BlrSystem::weight_mean(const Vector& y) const {
  check_inputs(xl_, y, noise_var_);
  if (form_ == Form::kSampleSpace) return xl_ * llt_.solve(y) / p_;
  return llt_.solve(xl_ * y) / p_;
}

double BlrSystem::predictive_variance(const Vector& xl_test) const {
  check_test(xl_, xl_test);
  double quad = 0.0;
  if (form_ == Form::kSampleSpace) {
    const Vector projected = llt_.matrixL().solve(xl_.transpose() * xl_test);
    quad = xl_test.squaredNorm() / p_ - projected.squaredNorm() / (double(p_) * p_);
  } else {
    quad = noise_var_ * llt_.matrixL().solve(xl_test).squaredNorm() / p_;
  }
  return noise_var_ + std::max(quad, 0.0);
}

PredictiveMoments BlrSystem::predict(const Vector& xl_test, const Vector& y) const {
  check_test(xl_, xl_test);
  return {xl_test.dot(weight_mean(y)), predictive_variance(xl_test)};
}

PredictiveMoments component_predictive(const Matrix& xl_train, const Vector& xl_test,
                                       const Vector& y, double noise_var) {
  check_inputs(xl_train, y, noise_var);
  return BlrSystem(xl_train, noise_var).predict(xl_test, y);
}

PredictiveMoments component_predictive_sample_space(const Matrix& xl_train, const Vector& xl_test,
                                                    const Vector& y, double noise_var) {
  check_inputs(xl_train, y, noise_var);
  check_test(xl_train, xl_test);
  const auto n = xl_train.cols();
  const double p = static_cast<double>(xl_train.rows());
  const Matrix a = xl_train.transpose() * xl_train / p + noise_var * Matrix::Identity(n, n);
  const auto llt = factor(a);
  const Vector cross = xl_train.transpose() * xl_test;
  const double mean = cross.dot(llt.solve(y)) / p;
  const double quad = xl_test.squaredNorm() / p - cross.dot(llt.solve(cross)) / (p * p);
  return {mean, noise_var + std::max(quad, 0.0)};
}

PredictiveMoments component_predictive_feature_space(const Matrix& xl_train,
                                                     const Vector& xl_test, const Vector& y,
                                                     double noise_var) {
  check_inputs(xl_train, y, noise_var);
  check_test(xl_train, xl_test);
  const auto pdim = xl_train.rows();
  const double p = static_cast<double>(pdim);
  const Matrix b = xl_train * xl_train.transpose() / p + noise_var * Matrix::Identity(pdim, pdim);
  const auto llt = factor(b);
  const double mean = xl_test.dot(llt.solve(xl_train * y)) / p;
  const double var = noise_var + noise_var * xl_test.dot(llt.solve(xl_test)) / p;
  return {mean, var};
}

FinalLayerPosterior final_layer_posterior(const Matrix& xl_train, const Vector& y,
                                          double noise_var) {
  check_inputs(xl_train, y, noise_var);
  const auto pdim = xl_train.rows();
  const double p = static_cast<double>(pdim);
  const Matrix precision =
      p * Matrix::Identity(pdim, pdim) + xl_train * xl_train.transpose() / noise_var;
  const auto llt = factor(precision);
  Matrix covariance = llt.solve(Matrix::Identity(pdim, pdim));
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  Vector mean = llt.solve(xl_train * y) / noise_var;
  return {std::move(mean), std::move(covariance)};
}

double log_marginal_likelihood(const Matrix& xl_train, const Vector& y, double noise_var) {
  check_inputs(xl_train, y, noise_var);
  const auto n = xl_train.cols();
  const double p = static_cast<double>(xl_train.rows());
  const Matrix cov = xl_train.transpose() * xl_train / p + noise_var * Matrix::Identity(n, n);
  const auto llt = factor(cov);
  const double quad = llt.matrixL().solve(y).squaredNorm();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + log_det(llt) + quad);
}

std::vector<double> spectral_terms(const Matrix& xl_train, const Vector& y, double noise_var) {
  check_inputs(xl_train, y, noise_var);
  const auto n = xl_train.cols();
  const double p = static_cast<double>(xl_train.rows());
  const Matrix scaled = xl_train / std::sqrt(p);
  Eigen::BDCSVD<Matrix> svd(scaled, Eigen::ComputeFullV);
  const Vector& singular = svd.singularValues();
  const Vector projections = svd.matrixV().transpose() * y;
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lambda = k < singular.size() ? singular(k) * singular(k) : 0.0;
    const double denom = lambda + noise_var;
    terms[static_cast<std::size_t>(k)] =
        std::log(denom) + projections(k) * projections(k) / denom;
  }
  return terms;
}

double log_marginal_likelihood_spectral(const Matrix& xl_train, const Vector& y,
                                        double noise_var) {
  return sum_terms(spectral_terms(xl_train, y, noise_var));
}

double log_marginal_from_gram(const Matrix& gram, const Vector& y, double noise_var) {
  if (gram.rows() != gram.cols() || gram.rows() != y.size())
    throw InvalidArgument("gram must be n x n with n = len(y)");
  if (!(noise_var > 0.0)) throw InvalidArgument("noise_var must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Vector projections = eig.eigenvectors().transpose() * y;
  std::vector<double> terms(static_cast<std::size_t>(y.size()));
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double denom = eig.eigenvalues()(k) + noise_var;
    if (!(denom > 0.0)) throw NumericError("gram has an eigenvalue below -noise_var");
    terms[static_cast<std::size_t>(k)] =
        std::log(denom) + projections(k) * projections(k) / denom;
  }
  return sum_terms(terms);
}

double optimal_log_marginal(const Vector& y, double noise_var) {
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * kLog2Pi + std::log(y.squaredNorm()) + 1.0 + (n - 1.0) * std::log(noise_var));
}

double log_marginal_upper_bound(int n, double noise_var) {
  return -0.5 * n * kLog2Pi - 0.5 * n * std::log(noise_var);
}

}  // namespace bnnmix
