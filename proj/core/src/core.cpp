#include "bnnmix/core.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "bnnmix/rng.hpp"

namespace bnnmix {

void require(bool condition, std::string_view message) {
  if (!condition) throw InvalidArgument(std::string(message));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw InvalidArgument(fmt::format("unknown activation '{}'", name));
}

std::string_view to_string(TargetGenerator g) {
  switch (g) {
    case TargetGenerator::kStandardGaussianY:
      return "standard_gaussian_y";
    case TargetGenerator::kTeacherNetwork:
      return "teacher_network";
  }
  return "unknown";
}

TargetGenerator target_generator_from_string(std::string_view name) {
  if (name == "standard_gaussian_y") return TargetGenerator::kStandardGaussianY;
  if (name == "teacher_network") return TargetGenerator::kTeacherNetwork;
  throw InvalidArgument(fmt::format("unknown target generator '{}'", name));
}

Dataset::Dataset(Matrix x1, Vector y, double noise_var, std::uint64_t seed,
                 TargetGenerator generator)
    : x1_(std::move(x1)),
      y_(std::move(y)),
      noise_var_(noise_var),
      seed_(seed),
      generator_(generator) {
  require(x1_.rows() >= 1 && x1_.cols() >= 1, "dataset needs d >= 1 and n >= 1");
  require(y_.size() == x1_.cols(),
          fmt::format("target length {} does not match n = {}", y_.size(), x1_.cols()));
  require(std::isfinite(noise_var_) && noise_var_ > 0.0, "noise_var must be positive");
  require(x1_.allFinite() && y_.allFinite(), "dataset entries must be finite");
}

Dataset Dataset::with_noise_var(double noise_var) const {
  return Dataset(x1_, y_, noise_var, seed_, generator_);
}

NetworkShape::NetworkShape(std::vector<int> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  require(widths_.size() >= 2, "network needs at least an input and a feature layer");
  for (int w : widths_) require(w >= 1, "layer widths must be positive");
}

ThetaCandidate::ThetaCandidate(std::vector<Layer> layers, double log_prior_mass)
    : layers_(std::move(layers)), log_prior_mass_(log_prior_mass) {
  require(!layers_.empty(), "candidate needs at least one layer");
  require(!std::isnan(log_prior_mass_) && log_prior_mass_ <= 1e-12 &&
              log_prior_mass_ > -std::numeric_limits<double>::infinity(),
          "prior mass must lie in (0, 1]");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    require(layer.bias.size() == layer.weights.cols(),
            fmt::format("layer {} bias length does not match its output width", l + 1));
    if (l > 0) {
      require(layers_[l - 1].weights.cols() == layer.weights.rows(),
              fmt::format("layer {} does not chain with layer {}", l + 1, l));
    }
  }
}

ThetaCandidate ThetaCandidate::with_log_prior_mass(double log_prior_mass) const {
  return ThetaCandidate(layers_, log_prior_mass);
}

void ThetaCandidate::check_shape(const NetworkShape& shape) const {
  const auto& widths = shape.widths();
  if (static_cast<int>(layers_.size()) != shape.layer_count()) {
    throw InvalidArgument(fmt::format("candidate has {} layers, shape expects {}",
                                      layers_.size(), shape.layer_count()));
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights.rows() != widths[l] || layers_[l].weights.cols() != widths[l + 1]) {
      throw InvalidArgument(fmt::format("layer {} is {}x{}, shape expects {}x{}", l + 1,
                                        layers_[l].weights.rows(), layers_[l].weights.cols(),
                                        widths[l], widths[l + 1]));
    }
  }
}

CandidateSet::CandidateSet(std::vector<ThetaCandidate> candidates)
    : candidates_(std::move(candidates)) {
  require(!candidates_.empty(), "candidate set must not be empty");
  // Compensated sum so large J still normalizes to 1e-12.
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& c : candidates_) {
    const double term = std::exp(c.log_prior_mass()) - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  require(std::abs(sum - 1.0) <= 1e-12,
          fmt::format("prior masses sum to {:.17g}, expected 1", sum));
}

std::vector<double> CandidateSet::log_prior_masses() const {
  std::vector<double> out;
  out.reserve(candidates_.size());
  for (const auto& c : candidates_) out.push_back(c.log_prior_mass());
  return out;
}

Matrix stack_test_points(std::span<const TestPoint> points) {
  require(!points.empty(), "need at least one test point");
  const auto d = points.front().x1_tilde.size();
  Matrix out(d, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].x1_tilde.size() == d, "test points have inconsistent dimension");
    out.col(static_cast<Eigen::Index>(i)) = points[i].x1_tilde;
  }
  return out;
}

Vector standardize_targets(const Vector& y) {
  const double n = static_cast<double>(y.size());
  const double mean = y.sum() / n;
  const double var = (y.array() - mean).square().sum() / n;
  if (!(var > 0.0)) throw NumericError("targets have zero variance; cannot standardize");
  return y / std::sqrt(var);
}

double uniform_log_mass(std::size_t count) { return -std::log(static_cast<double>(count)); }

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

}  // namespace

Dataset generate_dataset(int d, int n, double noise_var, TargetGenerator generator,
                         std::uint64_t seed) {
  require(d >= 1 && n >= 1, "dataset dimensions must be positive");
  require(std::isfinite(noise_var) && noise_var > 0.0, "noise_var must be positive");
  const RngPolicy policy(seed);

  auto input_rng = policy.stream(0, StreamTag::kInputs);
  Matrix x1 = gaussian_matrix(d, n, 1.0, input_rng);

  Vector y(n);
  if (generator == TargetGenerator::kStandardGaussianY) {
    auto target_rng = policy.stream(0, StreamTag::kTargets);
    y = gaussian_matrix(n, 1, 1.0, target_rng).col(0);
  } else {
    // Fixed random two-layer ReLU teacher of hidden width d.
    auto teacher_rng = policy.stream(0, StreamTag::kTeacher);
    const Matrix hidden = gaussian_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)), teacher_rng);
    const Vector readout = gaussian_matrix(d, 1, 1.0, teacher_rng).col(0);
    const Matrix features = (hidden.transpose() * x1).cwiseMax(0.0);
    y = features.transpose() * readout / std::sqrt(static_cast<double>(d));
    auto noise_rng = policy.stream(0, StreamTag::kTargetNoise);
    y += gaussian_matrix(n, 1, std::sqrt(noise_var), noise_rng).col(0);
  }
  return Dataset(std::move(x1), standardize_targets(y), noise_var, seed, generator);
}

std::vector<TestPoint> generate_test_points(int d, int m, std::uint64_t seed) {
  require(d >= 1 && m >= 1, "test point dimensions must be positive");
  const RngPolicy policy(seed);
  std::vector<TestPoint> points;
  points.reserve(m);
  for (int i = 0; i < m; ++i) {
    auto rng = policy.stream(static_cast<std::uint64_t>(i), StreamTag::kTestPoints);
    points.push_back(TestPoint{gaussian_matrix(d, 1, 1.0, rng).col(0)});
  }
  return points;
}

}  // namespace bnnmix
