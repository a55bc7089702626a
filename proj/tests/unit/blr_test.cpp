#include <gtest/gtest.h>

#include <cmath>

#include "bnnmix/blr.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bnnmix {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::relative_error;

struct Instance {
  Matrix x;
  Vector t;
  Vector y;
  double noise;
};

Instance random_instance(std::mt19937_64& rng, int max_size = 8) {
  std::uniform_int_distribution<int> size(1, max_size);
  std::uniform_real_distribution<double> log_noise(-4.0, 0.0);
  const int n = size(rng), p = size(rng);
  return {gaussian_matrix(p, n, rng), gaussian_vector(p, rng), gaussian_vector(n, rng),
          std::pow(10.0, log_noise(rng))};
}

TEST(ComponentPredictive, BothFormsMatchExplicitInverse) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    const auto ref = oracles::predictive_explicit(in.x, in.t, in.y, in.noise);
    const auto a = component_predictive_sample_space(in.x, in.t, in.y, in.noise);
    const auto b = component_predictive_feature_space(in.x, in.t, in.y, in.noise);
    const auto c = component_predictive(in.x, in.t, in.y, in.noise);
    const double scale = std::max(std::abs(ref.mean), 1e-6);
    EXPECT_LT(std::abs(a.mean - ref.mean) / scale, 1e-9);
    EXPECT_LT(std::abs(b.mean - ref.mean) / scale, 1e-9);
    EXPECT_LT(relative_error(a.var, ref.var), 1e-9);
    EXPECT_LT(relative_error(b.var, ref.var), 1e-9);
    EXPECT_NEAR(c.mean, ref.mean, 1e-9 * scale);
  }
}

TEST(ComponentPredictive, VarianceNeverBelowNoise) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng);
    EXPECT_GE(component_predictive(in.x, in.t, in.y, in.noise).var, in.noise);
  }
}

TEST(BlrSystem, ReusesOneFactorization) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    const BlrSystem sys(in.x, in.noise);
    EXPECT_EQ(sys.form(), in.x.cols() <= in.x.rows() ? BlrSystem::Form::kSampleSpace
                                                      : BlrSystem::Form::kFeatureSpace);
    const auto ref = oracles::predictive_explicit(in.x, in.t, in.y, in.noise);
    const auto got = sys.predict(in.t, in.y);
    EXPECT_NEAR(got.mean, ref.mean, 1e-9 * std::max(1.0, std::abs(ref.mean)));
    EXPECT_LT(relative_error(got.var, ref.var), 1e-9);
    EXPECT_LT(relative_error(sys.log_marginal(in.y),
                             oracles::log_marginal_explicit(in.x, in.y, in.noise)),
              1e-10);
    EXPECT_NEAR(in.t.dot(sys.weight_mean(in.y)), ref.mean, 1e-9 * std::max(1.0, std::abs(ref.mean)));
  }
}

TEST(FinalLayerPosterior, ReproducesPredictiveMoments) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    const auto post = final_layer_posterior(in.x, in.y, in.noise);
    const auto ref = component_predictive(in.x, in.t, in.y, in.noise);
    EXPECT_NEAR(in.t.dot(post.mean), ref.mean, 1e-9 * std::max(1.0, std::abs(ref.mean)));
    EXPECT_LT(relative_error(in.noise + in.t.dot(post.covariance * in.t), ref.var), 1e-9);
    EXPECT_EQ(post.covariance, post.covariance.transpose());
  }
}

TEST(LogMarginal, DenseSpectralAndExplicitAgree) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    const double ref = oracles::log_marginal_explicit(in.x, in.y, in.noise);
    EXPECT_LT(relative_error(log_marginal_likelihood(in.x, in.y, in.noise), ref), 1e-10);
    EXPECT_LT(relative_error(log_marginal_likelihood_spectral(in.x, in.y, in.noise), ref), 1e-10);
    const auto terms = spectral_terms(in.x, in.y, in.noise);
    EXPECT_EQ(terms.size(), static_cast<std::size_t>(in.x.cols()));
    for (double t : terms) EXPECT_GE(t, std::log(in.noise));
  }
}

TEST(LogMarginal, GramFormMatchesFeatureForm) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    const Matrix gram = in.x.transpose() * in.x / static_cast<double>(in.x.rows());
    EXPECT_LT(relative_error(log_marginal_from_gram(gram, in.y, in.noise),
                             log_marginal_likelihood(in.x, in.y, in.noise)),
              1e-10);
  }
}

TEST(LogMarginal, BoundedByNoiseOnlyTerm) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng);
    const int n = static_cast<int>(in.y.size());
    EXPECT_LE(log_marginal_likelihood(in.x, in.y, in.noise),
              log_marginal_upper_bound(n, in.noise));
    if (in.y.squaredNorm() > in.noise) {
      EXPECT_LE(log_marginal_likelihood(in.x, in.y, in.noise),
                optimal_log_marginal(in.y, in.noise) + 1e-9);
    }
  }
}

TEST(LogMarginal, ClosedFormOptimumValue) {
  std::mt19937_64 rng(17);
  const Vector y = gaussian_vector(5, rng);
  EXPECT_LT(relative_error(optimal_log_marginal(y, 0.01),
                           oracles::optimal_log_marginal_closed_form(y, 0.01)),
            1e-14);
}

TEST(LogMarginal, ZeroFeaturesGiveWhiteNoiseLikelihood) {
  const Vector y = Vector::LinSpaced(4, -1.0, 2.0);
  const double noise = 0.3;
  const double want = -0.5 * (4 * std::log(2.0 * M_PI * noise) + y.squaredNorm() / noise);
  EXPECT_NEAR(log_marginal_likelihood(Matrix::Zero(3, 4), y, noise), want, 1e-12);
  EXPECT_NEAR(log_marginal_likelihood_spectral(Matrix::Zero(3, 4), y, noise), want, 1e-12);
}

TEST(BlrSystem, RejectsBadInput) {
  EXPECT_THROW(BlrSystem(Matrix::Zero(2, 2), 0.0), InvalidArgument);
  const BlrSystem sys(Matrix::Identity(2, 3), 0.1);
  EXPECT_THROW(sys.log_marginal(Vector::Zero(2)), InvalidArgument);
}

}  // namespace
}  // namespace bnnmix
