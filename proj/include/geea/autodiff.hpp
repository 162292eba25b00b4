#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace geea::ad {

using Matrix = Eigen::MatrixXd;
using SpMatrix = Eigen::SparseMatrix<double>;

// A named trainable parameter. Gradients accumulate into `grad` across
// backward passes until zero_grad() is called.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  Tensor(std::string name_, Matrix value_)
      : name(std::move(name_)),
        value(std::move(value_)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // allocated on demand during backward
  bool needs_grad = false;
  Tensor* sink = nullptr;  // leaf nodes accumulate their gradient here
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  std::uint64_t id = 0;

  Matrix& grad_ref() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

// Handle to one node of a dynamically built computation graph. Graphs are
// rebuilt per step; nodes are freed once the last handle goes away.
class Var {
 public:
  Var() = default;
  explicit Var(detail::NodePtr n) : node_(std::move(n)) {}

  static Var constant(Matrix v);
  static Var scalar(double v);
  // Trainable leaf. The tensor must outlive every backward pass through
  // this node.
  static Var leaf(Tensor& t);

  bool valid() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  double scalar_value() const;  // requires 1x1
  bool needs_grad() const { return node_ && node_->needs_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

// Seeds d(loss)/d(loss) = 1 and runs reverse-mode accumulation. `loss` must
// be 1x1. Leaf gradients are added into their Tensor's grad (call
// Tensor::zero_grad between steps).
void backward(const Var& loss);

// ---- elementwise / arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);  // Hadamard
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var rsub_scalar(double c, const Var& a);  // c - a
Var vexp(const Var& a);
Var vlog(const Var& a);
Var vtanh(const Var& a);
Var vsqrt(const Var& a);
Var square(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var clamp(const Var& a, double lo, double hi);  // zero gradient outside (lo, hi)

// ---- matrix products ----
Var matmul(const Var& a, const Var& b);     // a * b
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var transpose(const Var& a);
// Fixed sparse left factor: out = (*s) * a. The shared_ptr keeps the sparse
// matrix alive for the backward pass.
Var spmm(std::shared_ptr<const SpMatrix> s, const Var& a);

// ---- reductions / broadcasting ----
Var sum(const Var& a);   // 1x1
Var mean(const Var& a);  // 1x1; mean of an empty matrix is 0
Var rowwise_sum(const Var& a);   // n x 1
Var rowwise_mean(const Var& a);  // n x 1
Var add_rowvec(const Var& a, const Var& r);  // a + replicate(r), r is 1 x m
Var mul_rowvec(const Var& a, const Var& r);
Var sub_colvec(const Var& a, const Var& c);  // a - replicate(c), c is n x 1
Var div_colvec(const Var& a, const Var& c);

// ---- structure ----
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& a, std::vector<Eigen::Index> idx);
// Cuts the gradient flow: value passes through, gradient does not.
Var detach(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace geea::ad
