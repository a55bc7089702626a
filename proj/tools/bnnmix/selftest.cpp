#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "bnnmix/blr.hpp"
#include "bnnmix/construct.hpp"
#include "bnnmix/features.hpp"
#include "bnnmix/mixture.hpp"
#include "bnnmix/rng.hpp"
#include "oracles.hpp"

namespace bnnmix::cli {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  return m;
}

struct Check {
  std::string name;
  std::function<std::string(std::mt19937_64&)> run;  // empty string on success
};

}  // namespace

int run_selftest(std::uint64_t seed, std::ostream& out) {
  const RngPolicy policy(seed);
  std::vector<Check> checks;

  checks.push_back({"predictive_forms", [](std::mt19937_64& rng) -> std::string {
    std::uniform_int_distribution<int> size(1, 8);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = size(rng), p = size(rng);
      const Matrix x = gaussian(p, n, rng);
      const Vector t = gaussian(p, 1, rng);
      const Vector y = gaussian(n, 1, rng);
      const auto ref = oracles::predictive_explicit(x, t, y, 0.1);
      for (const auto& got : {component_predictive_sample_space(x, t, y, 0.1),
                              component_predictive_feature_space(x, t, y, 0.1)}) {
        if (rel(got.mean, ref.mean) > 1e-10 && std::abs(got.mean - ref.mean) > 1e-12)
          return fmt::format("mean {} vs {}", got.mean, ref.mean);
        if (rel(got.var, ref.var) > 1e-10) return fmt::format("var {} vs {}", got.var, ref.var);
      }
    }
    return {};
  }});

  checks.push_back({"log_marginal_forms", [](std::mt19937_64& rng) -> std::string {
    std::uniform_int_distribution<int> size(1, 8);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = size(rng), p = size(rng);
      const Matrix x = gaussian(p, n, rng);
      const Vector y = gaussian(n, 1, rng);
      const double ref = oracles::log_marginal_explicit(x, y, 0.05);
      const double dense = log_marginal_likelihood(x, y, 0.05);
      const double spectral = log_marginal_likelihood_spectral(x, y, 0.05);
      if (rel(dense, ref) > 1e-10 || rel(spectral, ref) > 1e-10)
        return fmt::format("{} / {} vs {}", dense, spectral, ref);
    }
    return {};
  }});

  checks.push_back({"optimal_gram", [](std::mt19937_64& rng) -> std::string {
    const Vector y = gaussian(6, 1, rng);
    const auto target = optimal_gram(y, 0.01);
    const double got = log_marginal_from_gram(target.gram, y, 0.01);
    const double ref = oracles::optimal_log_marginal_closed_form(y, 0.01);
    if (rel(got, ref) > 1e-10) return fmt::format("{} vs {}", got, ref);
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix g = oracles::random_psd_with_trace(6, target.gram.trace(), rng);
      if (log_marginal_from_gram(g, y, 0.01) > got) return "random Gram beats the optimum";
    }
    return {};
  }});

  checks.push_back({"relu_features", [](std::mt19937_64& rng) -> std::string {
    const auto shape = NetworkShape::two_layer(5, 7);
    const Matrix w = gaussian(5, 7, rng);
    const Vector b = gaussian(7, 1, rng);
    const ThetaCandidate theta({Layer{w, b}}, 0.0);
    const Matrix x = gaussian(5, 4, rng);
    const Matrix got = forward_features(theta, x, shape).xl;
    const double err = (got - oracles::relu_features_loop(w, b, x)).cwiseAbs().maxCoeff();
    return err > 1e-12 ? fmt::format("max error {}", err) : std::string{};
  }});

  checks.push_back({"mixture_weights", [](std::mt19937_64& rng) -> std::string {
    std::normal_distribution<double> normal(0.0, 3.0);
    std::vector<double> logl(20), mass(20, std::log(1.0 / 20));
    for (auto& v : logl) v = normal(rng);
    const auto w = mixture_weights(logl, mass);
    std::vector<double> shifted(logl.size());
    for (std::size_t j = 0; j < logl.size(); ++j) shifted[j] = logl[j] + mass[j];
    const auto ref = oracles::softmax_direct(shifted);
    for (std::size_t j = 0; j < w.size(); ++j)
      if (std::abs(w[j] - ref[j]) > 1e-13) return fmt::format("weight {} differs", j);
    return {};
  }});

  checks.push_back({"relu_normalization", [](std::mt19937_64& rng) -> std::string {
    const auto est = oracles::relu_variance_mc(kReluUnitVarianceScale, 200000, rng);
    return std::abs(est.var - 1.0) > 0.02 ? fmt::format("variance {}", est.var) : std::string{};
  }});

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    auto rng = policy.stream(i, StreamTag::kOracle);
    std::string message;
    try {
      message = checks[i].run(rng);
    } catch (const std::exception& e) {
      message = e.what();
    }
    if (message.empty()) {
      out << fmt::format("PASS {}\n", checks[i].name);
    } else {
      out << fmt::format("FAIL {}: {}\n", checks[i].name, message);
      ++failures;
    }
  }
  return failures;
}

}  // namespace bnnmix::cli
