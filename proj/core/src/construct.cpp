#include "bnnmix/construct.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "bnnmix/rng.hpp"

namespace bnnmix {

namespace {

double target_scale(const Vector& y, double noise_var) {
  if (!(noise_var > 0.0)) throw InvalidArgument("noise_var must be positive");
  if (y.size() == 0 || !y.allFinite()) throw InvalidArgument("targets must be finite and non-empty");
  const double yty = y.squaredNorm();
  if (!(yty > noise_var)) {
    throw InfeasibleError(
        fmt::format("y^T y = {:.6g} does not exceed noise_var = {:.6g}", yty, noise_var));
  }
  return 1.0 - noise_var / yty;
}

GramTarget sign_split_gram(const Vector& direction, double scale, GramKind kind) {
  const Vector pos = direction.cwiseMax(0.0);
  const Vector neg = (-direction).cwiseMax(0.0);
  Matrix gram = scale * (pos * pos.transpose() + neg * neg.transpose());
  return GramTarget{std::move(gram), scale, direction, kind};
}

void fill_gaussian(Matrix& m, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
}

}  // namespace

void EquivalenceClassSpec::validate() const {
  require(n_rotations >= 1 && n_preimage >= 1 && n_colspace >= 1,
          "equivalence class counts must be at least 1");
  require(preimage_scale > 0.0 && colspace_scale >= 0.0,
          "equivalence class scales must be positive");
  require(givens_per_rotation >= 1, "need at least one Givens rotation per sample");
}

ThetaCandidate gaussian_candidate(const NetworkShape& shape, int j, int j_count,
                                  const GaussianPriorSpec& prior, std::uint64_t seed) {
  require(j_count >= 1 && j >= 0 && j < j_count, "candidate index out of range");
  require(prior.variance_scale > 0.0, "prior variance scale must be positive");
  const auto& widths = shape.widths();
  auto rng = RngPolicy(seed).stream(static_cast<std::uint64_t>(j), StreamTag::kCandidates);
  std::vector<Layer> layers;
  for (int l = 0; l < shape.layer_count(); ++l) {
    Matrix w(widths[l], widths[l + 1]);
    fill_gaussian(w, std::sqrt(prior.variance_scale / widths[l]), rng);
    layers.push_back(Layer{std::move(w), Vector::Zero(widths[l + 1])});
  }
  return ThetaCandidate(std::move(layers), uniform_log_mass(static_cast<std::size_t>(j_count)));
}

CandidateSet sample_gaussian_candidates(const NetworkShape& shape, int j_count,
                                        const GaussianPriorSpec& prior, std::uint64_t seed) {
  require(j_count >= 1, "j_count must be at least 1");
  std::vector<ThetaCandidate> out;
  out.reserve(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) out.push_back(gaussian_candidate(shape, j, j_count, prior, seed));
  return CandidateSet(std::move(out));
}

GramTarget optimal_gram(const Vector& y, double noise_var) {
  const double s = target_scale(y, noise_var);
  return GramTarget{s * y * y.transpose(), s, y, GramKind::kUnconstrained};
}

GramTarget relu_optimal_gram(const Vector& y, double noise_var) {
  return sign_split_gram(y, target_scale(y, noise_var), GramKind::kRelu);
}

Matrix row_space_projector(const Matrix& x1) {
  require(x1.size() > 0 && x1.allFinite(), "x1 must be finite and non-empty");
  Eigen::BDCSVD<Matrix> svd(x1, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) throw InvalidArgument("x1 must be nonzero");
  const double cutoff = 1e-10 * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  const Matrix basis = svd.matrixV().leftCols(rank);
  return basis * basis.transpose();
}

GramTarget projected_optimal_gram(const Matrix& x1, const Vector& y, double noise_var) {
  require(x1.cols() == y.size(), "x1 must have one column per target");
  const double s = target_scale(y, noise_var);
  const Vector projected = row_space_projector(x1) * y;
  return sign_split_gram(projected, s, GramKind::kProjectedRelu);
}

FeatureMatrix factor_gram_nonneg(const GramTarget& target, int p) {
  require(p >= 1, "p must be positive");
  const Vector& dir = target.direction;
  const bool has_pos = (dir.array() > 0.0).any();
  const bool has_neg = (dir.array() < 0.0).any();
  if (target.kind == GramKind::kUnconstrained && has_pos && has_neg)
    throw InfeasibleError("a sign-mixed unconstrained optimum has no nonnegative factor");

  const double amplitude = std::sqrt(static_cast<double>(p) * target.scale_factor);
  const Vector pos = amplitude * dir.cwiseMax(0.0);
  const Vector neg = amplitude * (-dir).cwiseMax(0.0);
  Matrix xl = Matrix::Zero(p, dir.size());
  if (has_pos && has_neg) {
    if (p < 2) throw InfeasibleError("sign-mixed targets need p >= 2 feature rows");
    xl.row(0) = pos.transpose();
    xl.row(1) = neg.transpose();
  } else if (has_neg) {
    xl.row(0) = neg.transpose();
  } else {
    xl.row(0) = pos.transpose();
  }
  return FeatureMatrix{std::move(xl), std::nullopt};
}

void apply_slack_rotation(Matrix& xl, Eigen::Index active, Eigen::Index slack, double angle) {
  require(active != slack && active >= 0 && slack >= 0 && active < xl.rows() && slack < xl.rows(),
          "rotation rows out of range");
  require(xl.row(slack).isZero(0.0), "slack row must be all zero");
  const Vector row = xl.row(active).transpose();
  xl.row(active) = std::cos(angle) * row.transpose();
  xl.row(slack) = std::sin(angle) * row.transpose();
}

std::vector<FeatureMatrix> rotate_features(const FeatureMatrix& xl, int n_samples,
                                           std::uint64_t seed, int givens_per_sample) {
  require(n_samples >= 1 && givens_per_sample >= 1, "sample counts must be positive");
  require((xl.xl.array() >= 0.0).all(), "features must be nonnegative");
  auto zero_rows = [](const Matrix& m) {
    std::vector<Eigen::Index> active, slack;
    for (Eigen::Index r = 0; r < m.rows(); ++r) (m.row(r).isZero(0.0) ? slack : active).push_back(r);
    return std::pair{active, slack};
  };
  {
    const auto [active, slack] = zero_rows(xl.xl);
    if (slack.empty()) throw InfeasibleError("no all-zero feature row to rotate into");
    if (active.empty()) throw InvalidArgument("features are identically zero");
  }

  const RngPolicy policy(seed);
  std::uniform_real_distribution<double> angle_dist(0.0, std::numbers::pi / 2.0);
  std::vector<FeatureMatrix> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    auto rng = policy.stream(static_cast<std::uint64_t>(s), StreamTag::kRotation);
    Matrix m = xl.xl;
    for (int k = 0; k < givens_per_sample; ++k) {
      const auto [active, slack] = zero_rows(m);
      if (slack.empty()) break;
      // Rejection loop; plane rotations into a zero row with angle in [0, pi/2]
      // keep every entry nonnegative, so a retry only guards round-off.
      for (int attempt = 0;; ++attempt) {
        std::uniform_int_distribution<std::size_t> pick_active(0, active.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_slack(0, slack.size() - 1);
        const auto a = active[pick_active(rng)];
        const auto z = slack[pick_slack(rng)];
        const double angle = angle_dist(rng);
        Matrix trial = m;
        apply_slack_rotation(trial, a, z, angle);
        if (trial.minCoeff() >= -1e-12) {
          m = trial.cwiseMax(0.0);
          break;
        }
        if (attempt > 100) throw NumericError("rotation kept violating nonnegativity");
      }
    }
    out.push_back(FeatureMatrix{std::move(m), std::nullopt});
  }
  return out;
}

std::vector<Matrix> sample_preimage(const Matrix& xl, int n_samples, double scale,
                                    std::uint64_t seed) {
  require(n_samples >= 1, "n_samples must be positive");
  require(scale > 0.0, "preimage scale must be positive");
  if ((xl.array() < 0.0).any()) throw InvalidArgument("ReLU features cannot be negative");
  const RngPolicy policy(seed);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    auto rng = policy.stream(static_cast<std::uint64_t>(s), StreamTag::kPreimage);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix z = xl;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      for (Eigen::Index i = 0; i < z.rows(); ++i)
        if (z(i, j) == 0.0) z(i, j) = -std::abs(normal(rng));
    out.push_back(std::move(z));
  }
  return out;
}

ColumnSpaceSolver::ColumnSpaceSolver(const Matrix& x1)
    : d_(static_cast<int>(x1.rows())), n_(static_cast<int>(x1.cols())) {
  require(x1.size() > 0 && x1.allFinite(), "x1 must be finite and non-empty");
  Eigen::ColPivHouseholderQR<Matrix> qr(x1);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_) {
    throw InfeasibleError(fmt::format(
        "x1 ({}x{}) has rank {} < n; theta^T x1 = z is not solvable in general", d_, n_,
        qr.rank()));
  }
  q_ = qr.householderQ() * Matrix::Identity(d_, n_);
  r_ = qr.matrixR().topLeftCorner(n_, n_).triangularView<Eigen::Upper>();
  perm_ = qr.colsPermutation();
}

Matrix ColumnSpaceSolver::minimum_norm(const Matrix& z) const {
  require(z.cols() == n_, "z must have one column per training input");
  // x1 P = Q R  =>  x1 (x1^T x1)^-1 = Q R^-T P^T.
  Matrix rhs = perm_.transpose() * z.transpose();
  r_.triangularView<Eigen::Upper>().transpose().solveInPlace(rhs);
  return q_ * rhs;
}

Matrix ColumnSpaceSolver::add_complement(Matrix theta, const Matrix& perturbation) const {
  theta += perturbation - q_ * (q_.transpose() * perturbation);
  return theta;
}

std::vector<ThetaCandidate> ColumnSpaceSolver::sample(const Matrix& z, int n_samples,
                                                      double scale, std::uint64_t seed) const {
  require(n_samples >= 1, "n_samples must be positive");
  require(scale >= 0.0, "column space scale must be nonnegative");
  const Matrix base = minimum_norm(z);
  const RngPolicy policy(seed);
  std::vector<ThetaCandidate> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    Matrix theta = base;
    if (scale > 0.0) {
      auto rng = policy.stream(static_cast<std::uint64_t>(s), StreamTag::kColumnSpace);
      Matrix w(d_, z.rows());
      fill_gaussian(w, scale / std::sqrt(static_cast<double>(d_)), rng);
      theta = add_complement(std::move(theta), w);
    }
    std::vector<Layer> layers;
    layers.push_back(Layer{std::move(theta), Vector::Zero(z.rows())});
    out.emplace_back(std::move(layers), 0.0);
  }
  return out;
}

std::vector<ThetaCandidate> sample_colspace_theta(const Matrix& x1, const Matrix& z,
                                                  int n_samples, double scale,
                                                  std::uint64_t seed) {
  require(z.cols() == x1.cols(), "z must have one column per training input");
  std::optional<ColumnSpaceSolver> solver;
  try {
    solver.emplace(x1);
  } catch (const InfeasibleError& e) {
    // Report how far the best least-squares solution is from solving the system.
    const Matrix best = x1.transpose().completeOrthogonalDecomposition().solve(z.transpose());
    const double residual = (x1.transpose() * best - z.transpose()).cwiseAbs().maxCoeff();
    throw InfeasibleError(fmt::format("{}; least-squares residual {:.3e}", e.what(), residual));
  }
  auto out = solver->sample(z, n_samples, scale, seed);
  for (const auto& c : out) {
    const double residual = (c.layers()[0].weights.transpose() * x1 - z).cwiseAbs().maxCoeff();
    if (!(residual < 1e-8))
      throw NumericError(fmt::format("column space residual {:.3e} exceeds 1e-8", residual));
  }
  return out;
}

CandidateSet build_equivalence_class(const Dataset& data, const NetworkShape& shape,
                                     const EquivalenceClassSpec& spec, std::uint64_t seed) {
  spec.validate();
  require(shape.layer_count() == 1, "equivalence classes are built for two-layer networks");
  require(shape.activation() == Activation::kRelu, "equivalence classes need ReLU activation");
  require(shape.input_dim() == data.d(), "shape does not match the dataset dimension");
  const int p = shape.feature_dim();
  require(p >= 3, "need p >= 3: two active feature rows and one slack row");
  if (data.n() > data.d()) {
    throw InfeasibleError(
        fmt::format("n = {} exceeds d = {}; the first layer cannot reach the target", data.n(),
                    data.d()));
  }

  const ColumnSpaceSolver solver(data.x1());
  const GramTarget target = relu_optimal_gram(data.y(), data.noise_var());
  const FeatureMatrix base = factor_gram_nonneg(target, p);

  const RngPolicy policy(seed);
  const auto rotations = rotate_features(base, spec.n_rotations,
                                         policy.derive(0, StreamTag::kRotation),
                                         spec.givens_per_rotation);
  const double log_mass = uniform_log_mass(spec.total());
  std::vector<ThetaCandidate> out;
  out.reserve(spec.total());
  for (int r = 0; r < spec.n_rotations; ++r) {
    const auto preimages =
        sample_preimage(rotations[static_cast<std::size_t>(r)].xl, spec.n_preimage,
                        spec.preimage_scale, policy.derive(static_cast<std::uint64_t>(r), StreamTag::kPreimage));
    for (int i = 0; i < spec.n_preimage; ++i) {
      const auto key = static_cast<std::uint64_t>(r) * spec.n_preimage + i;
      auto thetas = solver.sample(preimages[static_cast<std::size_t>(i)], spec.n_colspace,
                                  spec.colspace_scale, policy.derive(key, StreamTag::kColumnSpace));
      for (auto& t : thetas) out.push_back(t.with_log_prior_mass(log_mass));
    }
  }
  return CandidateSet(std::move(out));
}

}  // namespace bnnmix
