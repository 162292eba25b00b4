#include "geea/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace geea::nn {

Var affine(const Var& x, const Var& w, const Var& b) {
  return ad::add_rowvec(ad::matmul(x, w), b);
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  Var centered = ad::sub_colvec(x, ad::rowwise_mean(x));
  Var stddev = ad::vsqrt(ad::add_scalar(ad::rowwise_mean(ad::square(centered)), eps));
  Var normed = ad::div_colvec(centered, stddev);
  return ad::add_rowvec(ad::mul_rowvec(normed, gain), bias);
}

Var dropout(const Var& x, double rate, bool training, Rng& rng) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return ad::mul(x, Var::constant(std::move(mask)));
}

Var l2_normalize_rows(const Var& x, double eps) {
  Var norms = ad::vsqrt(ad::add_scalar(ad::rowwise_sum(ad::square(x)), eps));
  return ad::div_colvec(x, norms);
}

Var mse(const Var& a, const Var& b) { return ad::mean(ad::square(ad::sub(a, b))); }

Var bce_mean(const Var& probs, const Var& labels, double floor) {
  if (probs.rows() != labels.rows() || probs.cols() != labels.cols())
    throw std::invalid_argument("bce_mean: prediction/label shape mismatch");
  if (probs.value().size() == 0) return Var::scalar(0.0);
  Var p = ad::clamp(probs, floor, 1.0 - floor);
  Var pos = ad::mul(labels, ad::vlog(p));
  Var negv = ad::mul(ad::rsub_scalar(1.0, labels), ad::vlog(ad::rsub_scalar(1.0, p)));
  return ad::neg(ad::mean(ad::add(pos, negv)));
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return rng.uniform_matrix(rows, cols, -limit, limit);
}

DenseBlock DenseBlock::create(const std::string& name, Eigen::Index in, Eigen::Index out,
                              Rng& rng) {
  DenseBlock blk;
  blk.w = std::make_shared<Tensor>(name + ".w", xavier_uniform(in, out, rng));
  blk.b = std::make_shared<Tensor>(name + ".b", Matrix::Zero(1, out));
  blk.gain = std::make_shared<Tensor>(name + ".gain", Matrix::Ones(1, out));
  blk.bias = std::make_shared<Tensor>(name + ".bias", Matrix::Zero(1, out));
  return blk;
}

Var DenseBlock::forward(const Var& x, int activation) const {
  Var h = layer_norm(affine(x, Var::leaf(*w), Var::leaf(*b)), Var::leaf(*gain), Var::leaf(*bias));
  return activation == 1 ? ad::vtanh(h) : ad::relu(h);
}

Adam::Adam(std::vector<std::shared_ptr<Tensor>> params, double lr, double clip_norm, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), clip_norm_(clip_norm), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  double norm_sq = 0.0;
  for (const auto& p : params_) norm_sq += p->grad.squaredNorm();
  const double norm = std::sqrt(norm_sq);
  const double scale = (clip_norm_ > 0.0 && norm > clip_norm_) ? clip_norm_ / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    Matrix g = scale * p.grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix m_hat = m_[i] / bc1;
    Matrix v_hat = v_[i] / bc2;
    p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (const auto& p : params_) p->zero_grad();
}

}  // namespace geea::nn
