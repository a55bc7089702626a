#include "bnnmix/features.hpp"

#include <fmt/format.h>

namespace bnnmix {

void apply_activation(Activation activation, Matrix& values) {
  switch (activation) {
    case Activation::kRelu:
      values = values.cwiseMax(0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

FeatureMatrix forward_features(const ThetaCandidate& theta, const Matrix& inputs,
                               const NetworkShape& shape) {
  if (inputs.rows() != shape.input_dim()) {
    throw InvalidArgument(fmt::format("input has {} rows, network expects {}", inputs.rows(),
                                      shape.input_dim()));
  }
  theta.check_shape(shape);

  Matrix x = inputs;
  for (const auto& layer : theta.layers()) {
    Matrix next = layer.weights.transpose() * x;
    next.colwise() -= layer.bias;
    apply_activation(shape.activation(), next);
    if (!next.allFinite()) throw NumericError("non-finite activation in forward pass");
    x = std::move(next);
  }
  return FeatureMatrix{std::move(x), std::nullopt};
}

}  // namespace bnnmix
