#include <gtest/gtest.h>

#include <cmath>

#include "bnnmix/blr.hpp"
#include "bnnmix/classify.hpp"
#include "bnnmix/construct.hpp"
#include "bnnmix/features.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bnnmix {
namespace {

TEST(Probit, ZeroMeanIsExactlyOneHalf) {
  for (double v : {0.0, 0.1, 1.0, 100.0}) EXPECT_EQ(probit_sigmoid_expectation(0.0, v), 0.5);
  EXPECT_NEAR(gauss_hermite_sigmoid_expectation(0.0, 2.0), 0.5, 1e-15);
}

TEST(Probit, ZeroVarianceIsTheLogistic) {
  EXPECT_DOUBLE_EQ(probit_sigmoid_expectation(1.3, 0.0), logistic(1.3));
}

TEST(Probit, CloseToQuadrature) {
  for (double m : {-3.0, -1.0, 0.2, 2.0})
    for (double v : {0.01, 1.0, 5.0})
      EXPECT_NEAR(probit_sigmoid_expectation(m, v), gauss_hermite_sigmoid_expectation(m, v), 0.02);
}

TEST(Probit, MatchesSampledProbitIntegral) {
  std::mt19937_64 rng(40);
  for (double m : {-1.0, 0.7}) {
    const auto mc = oracles::probit_integral_mc(m, 2.0, 400000, rng);
    EXPECT_LT(std::abs(probit_sigmoid_expectation(m, 2.0) - mc.mean), 3.0 * mc.mean_se);
  }
}

TEST(Quadrature, MatchesSampledSigmoid) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.8, std::sqrt(3.0));
  double s = 0.0;
  const int samples = 400000;
  for (int i = 0; i < samples; ++i) s += logistic(normal(rng));
  EXPECT_NEAR(gauss_hermite_sigmoid_expectation(0.8, 3.0), s / samples, 2e-3);
}

TEST(MeanField, TwoClassesReduceToTheDifferenceSigmoid) {
  LogitPosterior logits{Eigen::Vector2d(0.3, -0.4), Eigen::Matrix2d::Identity() * 0.5};
  const double p1 = mean_field_class_prob(logits, 1);
  EXPECT_NEAR(p1, probit_sigmoid_expectation(-0.7, 1.0), 1e-15);
  EXPECT_NEAR(p1 + mean_field_class_prob(logits, 0), 1.0, 1e-12);
}

TEST(BinaryClass, SingleCandidateMatchesPredictiveFormula) {
  std::mt19937_64 rng(42);
  const Matrix x1 = testing::gaussian_matrix(5, 10, rng);
  Vector y(10);
  for (int i = 0; i < 10; ++i) y(i) = x1(0, i) > 0.0 ? 1.0 : 0.0;
  const Dataset data(x1, y, 0.05);
  const auto shape = NetworkShape::two_layer(5, 12);
  const auto set = sample_gaussian_candidates(shape, 1, {}, 4);
  const auto test = generate_test_points(5, 1, 6).front();
  const Matrix w = set[0].layers()[0].weights;
  const Matrix xl = oracles::relu_features_loop(w, Vector::Zero(12), x1);
  const Matrix xt = oracles::relu_features_loop(w, Vector::Zero(12), test.x1_tilde);
  const auto ref = oracles::predictive_explicit(xl, xt.col(0), y, 0.05);
  const auto mc = oracles::probit_integral_mc(ref.mean, ref.var, 400000, rng);
  const double got = binary_class_prob(set, data, test, shape);
  EXPECT_NEAR(got, 0.5 * std::erfc(-ref.mean / std::sqrt(2.0 * (8.0 / M_PI + ref.var))), 1e-12);
  EXPECT_LT(std::abs(got - mc.mean), 3.0 * mc.mean_se);
}

TEST(BinaryClass, RejectsNonBinaryTargets) {
  const Dataset data(Matrix::Identity(2, 2), Eigen::Vector2d(0.5, 1.0), 0.1);
  const auto shape = NetworkShape::two_layer(2, 3);
  const auto set = sample_gaussian_candidates(shape, 2, {}, 1);
  EXPECT_THROW(binary_class_prob(set, data, generate_test_points(2, 1, 1).front(), shape),
               InvalidArgument);
}

ClassificationData toy_classes(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix x1 = testing::gaussian_matrix(6, 12, rng);
  const Matrix teacher = testing::gaussian_matrix(6, k, rng);
  const Matrix scores = teacher.transpose() * x1;
  Matrix onehot = Matrix::Zero(12, k);
  for (int i = 0; i < 12; ++i) {
    Eigen::Index best;
    scores.col(i).maxCoeff(&best);
    onehot(i, best) = 1.0;
  }
  return {x1, onehot, 0.05};
}

TEST(Multiclass, ProbabilitiesAreInUnitIntervalAndRenormalize) {
  const auto data = toy_classes(3, 43);
  const auto shape = NetworkShape::two_layer(6, 10);
  const auto set = sample_gaussian_candidates(shape, 20, {}, 7);
  const auto test = generate_test_points(6, 1, 8).front();
  const auto raw = multiclass_probs(set, data, test, shape);
  for (double p : raw) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  MulticlassOptions options;
  options.renormalize = true;
  const auto norm = multiclass_probs(set, data, test, shape, options);
  EXPECT_NEAR(norm[0] + norm[1] + norm[2], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(multiclass_prob(set, data, test, shape, 2), raw[2]);
}

TEST(Multiclass, TwoClassProbabilitiesSumToOneWithoutRenormalizing) {
  const auto data = toy_classes(2, 44);
  const auto shape = NetworkShape::two_layer(6, 10);
  const auto set = sample_gaussian_candidates(shape, 20, {}, 7);
  const auto test = generate_test_points(6, 1, 8).front();
  const auto p = multiclass_probs(set, data, test, shape);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(ClassificationData, ValidatesOneHotRows) {
  ClassificationData bad{Matrix::Identity(2, 2), Matrix::Ones(2, 2), 0.1};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

}  // namespace
}  // namespace bnnmix
