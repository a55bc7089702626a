#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bnnmix/errors.hpp"

namespace bnnmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kIdentity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

enum class TargetGenerator { kStandardGaussianY, kTeacherNetwork };

std::string_view to_string(TargetGenerator g);
TargetGenerator target_generator_from_string(std::string_view name);

/// Training inputs (columns are samples), targets and observation noise.
class Dataset {
 public:
  Dataset(Matrix x1, Vector y, double noise_var, std::uint64_t seed = 0,
          TargetGenerator generator = TargetGenerator::kStandardGaussianY);

  const Matrix& x1() const { return x1_; }
  const Vector& y() const { return y_; }
  double noise_var() const { return noise_var_; }
  std::uint64_t seed() const { return seed_; }
  TargetGenerator generator() const { return generator_; }
  int d() const { return static_cast<int>(x1_.rows()); }
  int n() const { return static_cast<int>(x1_.cols()); }

  /// Same inputs and targets at a different noise level.
  Dataset with_noise_var(double noise_var) const;

 private:
  Matrix x1_;
  Vector y_;
  double noise_var_;
  std::uint64_t seed_;
  TargetGenerator generator_;
};

/// Layer widths [d, d_2, ..., p] and the shared activation.
class NetworkShape {
 public:
  NetworkShape(std::vector<int> widths, Activation activation = Activation::kRelu);

  static NetworkShape two_layer(int d, int p, Activation activation = Activation::kRelu) {
    return NetworkShape({d, p}, activation);
  }

  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  int input_dim() const { return widths_.front(); }
  int feature_dim() const { return widths_.back(); }
  /// Number of interior weight layers (L - 1).
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }

 private:
  std::vector<int> widths_;
  Activation activation_;
};

struct Layer {
  Matrix weights;  // d_l x d_{l+1}
  Vector bias;     // d_{l+1}
};

/// One realization of the interior parameters with its prior mass.
class ThetaCandidate {
 public:
  ThetaCandidate(std::vector<Layer> layers, double log_prior_mass);

  const std::vector<Layer>& layers() const { return layers_; }
  double log_prior_mass() const { return log_prior_mass_; }

  ThetaCandidate with_log_prior_mass(double log_prior_mass) const;

  /// Throws InvalidArgument unless the layer shapes chain with `shape`.
  void check_shape(const NetworkShape& shape) const;

 private:
  std::vector<Layer> layers_;
  double log_prior_mass_;
};

/// Discrete prior over interior parameters; masses sum to one.
class CandidateSet {
 public:
  explicit CandidateSet(std::vector<ThetaCandidate> candidates);

  const std::vector<ThetaCandidate>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }
  const ThetaCandidate& operator[](std::size_t j) const { return candidates_[j]; }

  std::vector<double> log_prior_masses() const;

 private:
  std::vector<ThetaCandidate> candidates_;
};

struct TestPoint {
  Vector x1_tilde;
};

/// Stack test points as the columns of a d x m matrix.
Matrix stack_test_points(std::span<const TestPoint> points);

/// Draws inputs as iid standard Gaussian columns; targets are rescaled to unit
/// population variance without centering.
Dataset generate_dataset(int d, int n, double noise_var, TargetGenerator generator,
                         std::uint64_t seed);

/// Test point i depends only on (seed, i), not on m.
std::vector<TestPoint> generate_test_points(int d, int m, std::uint64_t seed);

/// Divide by the population standard deviation; the mean is kept.
Vector standardize_targets(const Vector& y);

/// log(1/J) for each of J candidates.
double uniform_log_mass(std::size_t count);

void require(bool condition, std::string_view message);

}  // namespace bnnmix
