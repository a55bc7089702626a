#pragma once

#include <optional>

#include "bnnmix/core.hpp"

namespace bnnmix {

/// Last-hidden-layer activations, one column per input.
struct FeatureMatrix {
  Matrix xl;  // p x m
  std::optional<int> candidate_index;

  int p() const { return static_cast<int>(xl.rows()); }
  int count() const { return static_cast<int>(xl.cols()); }
};

void apply_activation(Activation activation, Matrix& values);

/// x_{l+1} = act(W_l^T x_l - b_l), applied layer by layer to the columns of `inputs`.
FeatureMatrix forward_features(const ThetaCandidate& theta, const Matrix& inputs,
                               const NetworkShape& shape);

}  // namespace bnnmix
