#include "geea/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <unordered_set>

namespace geea::ad {

using detail::Node;
using detail::NodePtr;

namespace {

std::atomic<std::uint64_t> g_next_id{1};

Var make_node(Matrix value, std::vector<NodePtr> parents, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  bool any_grad = false;
  for (const auto& p : parents) any_grad = any_grad || (p && p->needs_grad);
  if (any_grad) {
    n->needs_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return Var(n);
}

[[noreturn]] void shape_error(const char* op, const Var& a, const Var& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                              "x" + std::to_string(b.cols()) + ")");
}

void check_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

}  // namespace

Var Var::constant(Matrix v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Var(n);
}

Var Var::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Var::leaf(Tensor& t) {
  auto n = std::make_shared<Node>();
  n->value = t.value;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->needs_grad = true;
  n->sink = &t;
  n->backprop = [](Node& self) { self.sink->grad += self.grad; };
  return Var(n);
}

double Var::scalar_value() const {
  if (rows() != 1 || cols() != 1) throw std::invalid_argument("scalar_value: not 1x1");
  return node_->value(0, 0);
}

void backward(const Var& loss) {
  if (!loss.valid() || loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 value");
  if (!loss.needs_grad()) return;

  // Reverse topological order. Node ids increase with creation order and a
  // node's parents always precede it, so sorting reachable nodes by id
  // descending gives a valid schedule.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node().get()};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p && p->needs_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  loss.node()->grad_ref()(0, 0) += 1.0;
  for (Node* n : order) {
    if (n->backprop) n->backprop(*n);
  }
}

// ---- elementwise / arithmetic ----

Var add(const Var& a, const Var& b) {
  check_same_shape("add", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value + bn->value, {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad;
    if (bn->needs_grad) bn->grad_ref() += n.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape("sub", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value - bn->value, {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad;
    if (bn->needs_grad) bn->grad_ref() -= n.grad;
  });
}

Var neg(const Var& a) {
  auto an = a.node();
  return make_node(-an->value, {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() -= n.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape("mul", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value.cwiseProduct(bn->value), {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad.cwiseProduct(bn->value);
    if (bn->needs_grad) bn->grad_ref() += n.grad.cwiseProduct(an->value);
  });
}

Var div(const Var& a, const Var& b) {
  check_same_shape("div", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value.cwiseQuotient(bn->value), {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad.cwiseQuotient(bn->value);
    if (bn->needs_grad)
      bn->grad_ref() -= n.grad.cwiseProduct(an->value)
                            .cwiseQuotient(bn->value.cwiseProduct(bn->value));
  });
}

Var scale(const Var& a, double c) {
  auto an = a.node();
  return make_node(c * an->value, {an}, [an, c](Node& n) {
    if (an->needs_grad) an->grad_ref() += c * n.grad;
  });
}

Var add_scalar(const Var& a, double c) {
  auto an = a.node();
  return make_node(an->value.array() + c, {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad;
  });
}

Var rsub_scalar(double c, const Var& a) {
  auto an = a.node();
  return make_node(c - an->value.array(), {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() -= n.grad;
  });
}

Var vexp(const Var& a) {
  auto an = a.node();
  Matrix out = an->value.array().exp();
  return make_node(out, {an}, [an, out](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad.cwiseProduct(out);
  });
}

Var vlog(const Var& a) {
  auto an = a.node();
  return make_node(an->value.array().log(), {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad.cwiseQuotient(an->value);
  });
}

Var vtanh(const Var& a) {
  auto an = a.node();
  Matrix out = an->value.array().tanh();
  return make_node(out, {an}, [an, out](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += n.grad.cwiseProduct((1.0 - out.array().square()).matrix());
  });
}

Var vsqrt(const Var& a) {
  auto an = a.node();
  Matrix out = an->value.array().sqrt();
  return make_node(out, {an}, [an, out](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += (n.grad.array() * 0.5 / out.array()).matrix();
  });
}

Var square(const Var& a) {
  auto an = a.node();
  return make_node(an->value.array().square(), {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() += 2.0 * n.grad.cwiseProduct(an->value);
  });
}

Var relu(const Var& a) {
  auto an = a.node();
  return make_node(an->value.cwiseMax(0.0), {an}, [an](Node& n) {
    if (an->needs_grad)
      an->grad_ref() +=
          n.grad.cwiseProduct((an->value.array() > 0.0).cast<double>().matrix());
  });
}

Var sigmoid(const Var& a) {
  auto an = a.node();
  Matrix out = (1.0 / (1.0 + (-an->value.array()).exp())).matrix();
  return make_node(out, {an}, [an, out](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += (n.grad.array() * out.array() * (1.0 - out.array())).matrix();
  });
}

Var clamp(const Var& a, double lo, double hi) {
  auto an = a.node();
  return make_node(an->value.cwiseMax(lo).cwiseMin(hi), {an}, [an, lo, hi](Node& n) {
    if (!an->needs_grad) return;
    Matrix mask = ((an->value.array() > lo) && (an->value.array() < hi)).cast<double>();
    an->grad_ref() += n.grad.cwiseProduct(mask);
  });
}

// ---- matrix products ----

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value * bn->value, {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref().noalias() += n.grad * bn->value.transpose();
    if (bn->needs_grad) bn->grad_ref().noalias() += an->value.transpose() * n.grad;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  auto an = a.node(), bn = b.node();
  return make_node(an->value * bn->value.transpose(), {an, bn}, [an, bn](Node& n) {
    if (an->needs_grad) an->grad_ref().noalias() += n.grad * bn->value;
    if (bn->needs_grad) bn->grad_ref().noalias() += n.grad.transpose() * an->value;
  });
}

Var transpose(const Var& a) {
  auto an = a.node();
  return make_node(an->value.transpose(), {an}, [an](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad.transpose();
  });
}

Var spmm(std::shared_ptr<const SpMatrix> s, const Var& a) {
  if (!s) throw std::invalid_argument("spmm: null sparse factor");
  if (s->cols() != a.rows())
    throw std::invalid_argument("spmm: shape mismatch (" + std::to_string(s->rows()) + "x" +
                                std::to_string(s->cols()) + " * " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + ")");
  auto an = a.node();
  return make_node((*s) * an->value, {an}, [an, s](Node& n) {
    if (an->needs_grad) an->grad_ref() += s->transpose() * n.grad;
  });
}

// ---- reductions / broadcasting ----

Var sum(const Var& a) {
  auto an = a.node();
  Matrix out(1, 1);
  out(0, 0) = an->value.sum();
  return make_node(out, {an}, [an](Node& n) {
    if (an->needs_grad)
      an->grad_ref().array() += n.grad(0, 0);
  });
}

Var mean(const Var& a) {
  auto an = a.node();
  const double count = static_cast<double>(an->value.size());
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? an->value.sum() / count : 0.0;
  return make_node(out, {an}, [an, count](Node& n) {
    if (an->needs_grad && count > 0)
      an->grad_ref().array() += n.grad(0, 0) / count;
  });
}

Var rowwise_sum(const Var& a) {
  auto an = a.node();
  return make_node(an->value.rowwise().sum(), {an}, [an](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += n.grad.col(0).replicate(1, an->value.cols());
  });
}

Var rowwise_mean(const Var& a) {
  auto an = a.node();
  const double m = static_cast<double>(an->value.cols());
  return make_node(an->value.rowwise().mean(), {an}, [an, m](Node& n) {
    if (an->needs_grad && m > 0)
      an->grad_ref() += (n.grad.col(0) / m).replicate(1, an->value.cols());
  });
}

Var add_rowvec(const Var& a, const Var& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) shape_error("add_rowvec", a, r);
  auto an = a.node(), rn = r.node();
  Matrix out = an->value;
  out.rowwise() += rn->value.row(0);
  return make_node(std::move(out), {an, rn}, [an, rn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad;
    if (rn->needs_grad) rn->grad_ref() += n.grad.colwise().sum();
  });
}

Var mul_rowvec(const Var& a, const Var& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) shape_error("mul_rowvec", a, r);
  auto an = a.node(), rn = r.node();
  Matrix out = an->value.array().rowwise() * rn->value.row(0).array();
  return make_node(std::move(out), {an, rn}, [an, rn](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += (n.grad.array().rowwise() * rn->value.row(0).array()).matrix();
    if (rn->needs_grad)
      rn->grad_ref() += n.grad.cwiseProduct(an->value).colwise().sum();
  });
}

Var sub_colvec(const Var& a, const Var& c) {
  if (c.cols() != 1 || c.rows() != a.rows()) shape_error("sub_colvec", a, c);
  auto an = a.node(), cn = c.node();
  Matrix out = an->value;
  out.colwise() -= cn->value.col(0);
  return make_node(std::move(out), {an, cn}, [an, cn](Node& n) {
    if (an->needs_grad) an->grad_ref() += n.grad;
    if (cn->needs_grad) cn->grad_ref() -= n.grad.rowwise().sum();
  });
}

Var div_colvec(const Var& a, const Var& c) {
  if (c.cols() != 1 || c.rows() != a.rows()) shape_error("div_colvec", a, c);
  auto an = a.node(), cn = c.node();
  Matrix out = an->value.array().colwise() / cn->value.col(0).array();
  return make_node(out, {an, cn}, [an, cn, out](Node& n) {
    if (an->needs_grad)
      an->grad_ref() += (n.grad.array().colwise() / cn->value.col(0).array()).matrix();
    if (cn->needs_grad)
      cn->grad_ref() -= (n.grad.cwiseProduct(out).rowwise().sum().array() /
                         cn->value.col(0).array())
                            .matrix();
  });
}

// ---- structure ----

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index total = 0;
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts.front(), p);
    total += p.cols();
    nodes.push_back(p.node());
  }
  Matrix out(rows, total);
  Eigen::Index off = 0;
  for (const auto& n : nodes) {
    out.middleCols(off, n->value.cols()) = n->value;
    off += n->value.cols();
  }
  return make_node(std::move(out), {nodes.begin(), nodes.end()}, [nodes](Node& n) {
    Eigen::Index off = 0;
    for (const auto& p : nodes) {
      if (p->needs_grad) p->grad_ref() += n.grad.middleCols(off, p->value.cols());
      off += p->value.cols();
    }
  });
}

Var gather_rows(const Var& a, std::vector<Eigen::Index> idx) {
  auto an = a.node();
  Matrix out(static_cast<Eigen::Index>(idx.size()), an->value.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= an->value.rows())
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx[k]) +
                                  " out of range [0, " + std::to_string(an->value.rows()) + ")");
    out.row(static_cast<Eigen::Index>(k)) = an->value.row(idx[k]);
  }
  return make_node(std::move(out), {an}, [an, idx = std::move(idx)](Node& n) {
    if (!an->needs_grad) return;
    auto& g = an->grad_ref();
    for (std::size_t k = 0; k < idx.size(); ++k)
      g.row(idx[k]) += n.grad.row(static_cast<Eigen::Index>(k));
  });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

}  // namespace geea::ad
