#include <gtest/gtest.h>

#include <cmath>

#include "bnnmix/blr.hpp"
#include "bnnmix/construct.hpp"
#include "bnnmix/features.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bnnmix {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::relative_error;

Matrix normalized_gram(const Matrix& xl) {
  return xl.transpose() * xl / static_cast<double>(xl.rows());
}

TEST(GaussianCandidates, EntriesFollowThePriorScale) {
  const auto shape = NetworkShape::two_layer(40, 50);
  const auto set = sample_gaussian_candidates(shape, 20, {}, 3);
  double ss = 0.0;
  std::size_t count = 0;
  for (const auto& theta : set.candidates()) {
    const Matrix& w = theta.layers()[0].weights;
    ss += w.squaredNorm();
    count += static_cast<std::size_t>(w.size());
    EXPECT_TRUE(theta.layers()[0].bias.isZero());
    EXPECT_NEAR(theta.log_prior_mass(), std::log(1.0 / 20), 1e-15);
  }
  const double want = kReluUnitVarianceScale / 40.0;
  EXPECT_NEAR(ss / count, want, 4.0 * want * std::sqrt(2.0 / count));
}

TEST(GaussianCandidates, SingleCandidateMatchesBatch) {
  const auto shape = NetworkShape({6, 7, 8});
  const auto set = sample_gaussian_candidates(shape, 5, {}, 9);
  for (int j = 0; j < 5; ++j) {
    const auto alone = gaussian_candidate(shape, j, 5, {}, 9);
    for (std::size_t l = 0; l < 2; ++l)
      EXPECT_EQ(alone.layers()[l].weights, set[static_cast<std::size_t>(j)].layers()[l].weights);
  }
}

TEST(ReluNormalization, VarianceIsOneAtTheConstant) {
  std::mt19937_64 rng(30);
  const auto est = oracles::relu_variance_mc(kReluUnitVarianceScale, 1000000, rng);
  EXPECT_NEAR(est.var, 1.0, 0.02);
}

TEST(OptimalGram, AttainsTheClosedFormAndBeatsRandomGrams) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = gaussian_vector(7, rng);
    const auto target = optimal_gram(y, 0.01);
    const double best = log_marginal_from_gram(target.gram, y, 0.01);
    EXPECT_LT(relative_error(best, oracles::optimal_log_marginal_closed_form(y, 0.01)), 1e-10);
    for (int k = 0; k < 50; ++k) {
      const Matrix g = oracles::random_psd_with_trace(7, target.gram.trace(), rng);
      EXPECT_LT(log_marginal_from_gram(g, y, 0.01), best);
    }
  }
}

TEST(OptimalGram, InfeasibleWhenTargetsAreTooSmall) {
  EXPECT_THROW(optimal_gram(Vector::Constant(2, 0.01), 0.01), InfeasibleError);
}

TEST(ReluOptimalGram, IsEntrywiseReluOfTheOptimum) {
  std::mt19937_64 rng(32);
  const Vector y = gaussian_vector(6, rng);
  const auto relu = relu_optimal_gram(y, 0.05);
  const auto plain = optimal_gram(y, 0.05);
  EXPECT_LT((relu.gram - plain.gram.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(relu.gram);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(RowSpaceProjector, OneDimensionalExample) {
  Matrix x1(1, 2);
  x1 << 1.0, 0.0;
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 1.0;
  EXPECT_LT((row_space_projector(x1) - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RowSpaceProjector, IdentityWhenInputsSpanTheSamples) {
  std::mt19937_64 rng(33);
  const Matrix x1 = gaussian_matrix(10, 6, rng);
  EXPECT_LT((row_space_projector(x1) - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix wide = gaussian_matrix(3, 6, rng);
  const Matrix p = row_space_projector(wide);
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(p.trace(), 3.0, 1e-10);
}

TEST(FactorGram, FeaturesReproduceTheTarget) {
  std::mt19937_64 rng(34);
  const Vector y = gaussian_vector(8, rng);
  const Matrix x1 = gaussian_matrix(4, 8, rng);
  for (const auto& target : {relu_optimal_gram(y, 0.01), projected_optimal_gram(x1, y, 0.01)}) {
    const auto f = factor_gram_nonneg(target, 12);
    EXPECT_EQ(f.p(), 12);
    EXPECT_GE(f.xl.minCoeff(), 0.0);
    EXPECT_LT((normalized_gram(f.xl) - target.gram).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(factor_gram_nonneg(optimal_gram(y, 0.01), 12), InfeasibleError);
}

TEST(Rotations, PreserveGramAndNonnegativity) {
  std::mt19937_64 rng(35);
  const Vector y = gaussian_vector(6, rng);
  const auto f = factor_gram_nonneg(relu_optimal_gram(y, 0.01), 9);
  const Matrix gram = normalized_gram(f.xl);
  const auto rotated = rotate_features(f, 15, 4);
  ASSERT_EQ(rotated.size(), 15u);
  for (const auto& r : rotated) {
    EXPECT_GE(r.xl.minCoeff(), 0.0);
    EXPECT_LT((normalized_gram(r.xl) - gram).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_NE(rotated[0].xl, rotated[1].xl);
}

TEST(Rotations, NeedASlackRow) {
  FeatureMatrix full{Matrix::Ones(2, 3), {}};
  EXPECT_THROW(rotate_features(full, 1, 0), InfeasibleError);
}

TEST(Preimage, ReluRecoversTheFeatures) {
  std::mt19937_64 rng(36);
  const Matrix xl = gaussian_matrix(5, 7, rng).cwiseMax(0.0);
  for (const auto& z : sample_preimage(xl, 5, 1.5, 2)) {
    EXPECT_EQ(z.cwiseMax(0.0), xl);
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (xl.data()[i] == 0.0) {
        EXPECT_LT(z.data()[i], 0.0);
      }
  }
}

TEST(ColumnSpace, SolutionsReproducePreactivations) {
  std::mt19937_64 rng(37);
  const Matrix x1 = gaussian_matrix(12, 5, rng);
  const Matrix z = gaussian_matrix(7, 5, rng);
  const ColumnSpaceSolver solver(x1);
  const Matrix base = solver.minimum_norm(z);
  EXPECT_LT((base.transpose() * x1 - z).cwiseAbs().maxCoeff(), 1e-10);
  const auto samples = solver.sample(z, 4, 1.0, 3);
  for (const auto& theta : samples) {
    const Matrix& w = theta.layers()[0].weights;
    EXPECT_LT((w.transpose() * x1 - z).cwiseAbs().maxCoeff(), 1e-10);
    // Minimum-norm part is orthogonal to the added complement.
    EXPECT_NEAR(w.squaredNorm(), base.squaredNorm() + (w - base).squaredNorm(), 1e-8);
  }
}

TEST(ColumnSpace, RequiresFullColumnRank) {
  std::mt19937_64 rng(38);
  EXPECT_THROW(ColumnSpaceSolver(gaussian_matrix(3, 5, rng)), InfeasibleError);
}

TEST(EquivalenceClass, SharesGramAndMarginalLikelihood) {
  const auto data = generate_dataset(20, 8, 0.01, TargetGenerator::kStandardGaussianY, 5);
  const auto shape = NetworkShape::two_layer(20, 15);
  EquivalenceClassSpec spec;
  spec.n_rotations = 3;
  spec.n_preimage = 2;
  spec.n_colspace = 2;
  const auto set = build_equivalence_class(data, shape, spec, 4);
  ASSERT_EQ(set.size(), 12u);
  const Matrix gram0 = normalized_gram(forward_features(set[0], data.x1(), shape).xl);
  const double logl0 = log_marginal_likelihood(
      forward_features(set[0], data.x1(), shape).xl, data.y(), data.noise_var());
  for (const auto& theta : set.candidates()) {
    const Matrix xl = forward_features(theta, data.x1(), shape).xl;
    EXPECT_LT((normalized_gram(xl) - gram0).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(relative_error(log_marginal_likelihood(xl, data.y(), data.noise_var()), logl0), 1e-8);
  }
  const auto target = projected_optimal_gram(data.x1(), data.y(), data.noise_var());
  EXPECT_LT((gram0 - target.gram).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EquivalenceClass, RejectsMoreSamplesThanInputs) {
  const auto data = generate_dataset(4, 8, 0.01, TargetGenerator::kStandardGaussianY, 5);
  EXPECT_THROW(build_equivalence_class(data, NetworkShape::two_layer(4, 10), {}, 1),
               InfeasibleError);
}

}  // namespace
}  // namespace bnnmix
