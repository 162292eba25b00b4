#pragma once

#include "geea/autodiff.hpp"
#include "geea/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace geea::nn {

using ad::Matrix;
using ad::Tensor;
using ad::Var;

// x * w + bias, bias broadcast over rows.
Var affine(const Var& x, const Var& w, const Var& b);
inline Var affine(const Var& x, Tensor& w, Tensor& b) {
  return affine(x, Var::leaf(w), Var::leaf(b));
}

// Row-wise layer normalization with learnable gain/bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// Inverted dropout; identity when `training` is false or rate is 0.
Var dropout(const Var& x, double rate, bool training, Rng& rng);

Var l2_normalize_rows(const Var& x, double eps = 1e-12);

Var mse(const Var& a, const Var& b);

// Mean binary cross-entropy with the probability floor applied to `probs`.
Var bce_mean(const Var& probs, const Var& labels, double floor = 1e-7);

// Fan-based uniform (Xavier) initialization: U(-sqrt(6/(fan_in+fan_out)), +...).
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// One affine + layer-norm + activation block, the hidden-layer unit shared
// by the VAE stacks and the feature decoders.
struct DenseBlock {
  std::shared_ptr<Tensor> w, b, gain, bias;

  static DenseBlock create(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  // activation: 0 = relu, 1 = tanh
  Var forward(const Var& x, int activation) const;
  std::vector<std::shared_ptr<Tensor>> tensors() const { return {w, b, gain, bias}; }
};

// Adam with global gradient-norm clipping. Moment buffers are keyed by the
// order of the tensor list, which must not change between steps.
class Adam {
 public:
  Adam(std::vector<std::shared_ptr<Tensor>> params, double lr, double clip_norm = 5.0,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  double lr() const { return lr_; }

 private:
  std::vector<std::shared_ptr<Tensor>> params_;
  double lr_, clip_norm_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace geea::nn
