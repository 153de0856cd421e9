#include "ssp/linalg_ad/tape.hpp"

#include <cmath>
#include <string>

namespace ssp::ad {

namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

void require_same_shape(const char* op, const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double gelu(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Node& Tape::at(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("tape: invalid variable handle " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Mat& Tape::value(Var v) const { return at(v).value; }

double Tape::scalar_value(Var v) const {
  const Mat& m = at(v).value;
  if (m.size() != 1) throw DimensionError("tape: node is not scalar");
  return m(0, 0);
}

const Node& Tape::node(Var v) const { return at(v); }

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Mat value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require_same_shape("add", na.value, nb.value);
  Node n;
  n.op = OpKind::Add;
  n.parents = {a.id, b.id};
  n.value = na.value + nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require_same_shape("sub", na.value, nb.value);
  Node n;
  n.op = OpKind::Sub;
  n.parents = {a.id, b.id};
  n.value = na.value - nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require_same_shape("mul", na.value, nb.value);
  Node n;
  n.op = OpKind::Mul;
  n.parents = {a.id, b.id};
  n.value = na.value.cwiseProduct(nb.value);
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  const Node& na = at(a);
  Node n;
  n.op = OpKind::Scale;
  n.parents = {a.id, -1};
  n.scalar = s;
  n.value = s * na.value;
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::axpy(Var a, double s, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  require_same_shape("axpy", na.value, nb.value);
  Node n;
  n.op = OpKind::Axpy;
  n.parents = {a.id, b.id};
  n.scalar = s;
  n.value = na.value + s * nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.cols() != nb.value.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(na.value.cols()) + " and " +
                         std::to_string(nb.value.rows()) + " differ");
  }
  Node n;
  n.op = OpKind::MatMul;
  n.parents = {a.id, b.id};
  n.value.noalias() = na.value * nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::add_column(Var m, Var column) {
  const Node& nm = at(m);
  const Node& nc = at(column);
  if (nc.value.cols() != 1 || nc.value.rows() != nm.value.rows()) {
    throw DimensionError("add_column: column has shape " + std::to_string(nc.value.rows()) + "x" +
                         std::to_string(nc.value.cols()) + ", expected " +
                         std::to_string(nm.value.rows()) + "x1");
  }
  Node n;
  n.op = OpKind::AddColumn;
  n.parents = {m.id, column.id};
  n.value = nm.value.colwise() + nc.value.col(0);
  n.needs_grad = nm.needs_grad || nc.needs_grad;
  return push(std::move(n));
}

Var Tape::gelu(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = OpKind::Gelu;
  n.parents = {a.id, -1};
  n.value = na.value.unaryExpr([](double x) { return ad::gelu(x); });
  n.needs_grad = na.needs_grad;
  if (n.needs_grad) n.partial = na.value.unaryExpr([](double x) { return gelu_derivative(x); });
  return push(std::move(n));
}

Var Tape::abs(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = OpKind::Abs;
  n.parents = {a.id, -1};
  n.value = na.value.cwiseAbs();
  n.needs_grad = na.needs_grad;
  if (n.needs_grad) n.partial = na.value.unaryExpr([](double x) { return sign_or_zero(x); });
  return push(std::move(n));
}

Var Tape::square(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = OpKind::Square;
  n.parents = {a.id, -1};
  n.value = na.value.cwiseProduct(na.value);
  n.needs_grad = na.needs_grad;
  if (n.needs_grad) n.partial = 2.0 * na.value;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = OpKind::Sum;
  n.parents = {a.id, -1};
  n.value = Mat::Constant(1, 1, na.value.sum());
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::rows(Var a, int first, int count) {
  const Node& na = at(a);
  if (first < 0 || count <= 0 || first + count > na.value.rows()) {
    throw DimensionError("rows: block [" + std::to_string(first) + ", " +
                         std::to_string(first + count) + ") outside " +
                         std::to_string(na.value.rows()) + " rows");
  }
  Node n;
  n.op = OpKind::Rows;
  n.parents = {a.id, -1};
  n.offset = first;
  n.count = count;
  n.value = na.value.middleRows(first, count);
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::control_affine(Var out, Var actions, int n_state) {
  const Node& no = at(out);
  const Node& na = at(actions);
  const Eigen::Index m = na.value.rows();
  const Eigen::Index batch = na.value.cols();
  if (no.value.rows() != n_state * (1 + m) || no.value.cols() != batch) {
    throw DimensionError("control_affine: output block is " + std::to_string(no.value.rows()) +
                         "x" + std::to_string(no.value.cols()) + ", expected " +
                         std::to_string(n_state * (1 + m)) + "x" + std::to_string(batch));
  }
  Node n;
  n.op = OpKind::ControlAffine;
  n.parents = {out.id, actions.id};
  n.count = n_state;
  n.value = no.value.topRows(n_state);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < n_state; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) acc += no.value(n_state + i * m + j, b) * na.value(j, b);
      n.value(i, b) += acc;
    }
  }
  n.needs_grad = no.needs_grad || na.needs_grad;
  return push(std::move(n));
}

Gradients Tape::backward(Var output) const {
  const Node& out = at(output);
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw DimensionError("backward: output node is " + std::to_string(out.value.rows()) + "x" +
                         std::to_string(out.value.cols()) + ", expected a scalar");
  }
  Gradients grads;
  grads.adjoint_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    grads.adjoint_[i] = Mat::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  grads.adjoint_[static_cast<std::size_t>(output.id)](0, 0) = 1.0;

  auto& adj = grads.adjoint_;
  for (int idx = output.id; idx >= 0; --idx) {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (!n.needs_grad || n.op == OpKind::Leaf) continue;
    const Mat& g = adj[static_cast<std::size_t>(idx)];
    if (g.isZero(0.0)) continue;
    const auto pa = static_cast<std::size_t>(n.parents[0]);
    const auto pb = n.parents[1] >= 0 ? static_cast<std::size_t>(n.parents[1]) : pa;
    const bool ga = nodes_[pa].needs_grad;
    const bool gb = n.parents[1] >= 0 && nodes_[pb].needs_grad;

    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::Add:
        if (ga) adj[pa] += g;
        if (gb) adj[pb] += g;
        break;
      case OpKind::Sub:
        if (ga) adj[pa] += g;
        if (gb) adj[pb] -= g;
        break;
      case OpKind::Mul:
        if (ga) adj[pa] += g.cwiseProduct(nodes_[pb].value);
        if (gb) adj[pb] += g.cwiseProduct(nodes_[pa].value);
        break;
      case OpKind::Scale:
        if (ga) adj[pa] += n.scalar * g;
        break;
      case OpKind::Axpy:
        if (ga) adj[pa] += g;
        if (gb) adj[pb] += n.scalar * g;
        break;
      case OpKind::MatMul:
        if (ga) adj[pa].noalias() += g * nodes_[pb].value.transpose();
        if (gb) adj[pb].noalias() += nodes_[pa].value.transpose() * g;
        break;
      case OpKind::AddColumn:
        if (ga) adj[pa] += g;
        if (gb) adj[pb] += g.rowwise().sum();
        break;
      case OpKind::Gelu:
      case OpKind::Abs:
      case OpKind::Square:
        if (ga) adj[pa] += g.cwiseProduct(n.partial);
        break;
      case OpKind::Sum:
        if (ga) adj[pa].array() += g(0, 0);
        break;
      case OpKind::Rows:
        if (ga) adj[pa].middleRows(n.offset, n.count) += g;
        break;
      case OpKind::ControlAffine: {
        const Mat& outv = nodes_[pa].value;
        const Mat& act = nodes_[pb].value;
        const int ns = n.count;
        const Eigen::Index m = act.rows();
        for (Eigen::Index b = 0; b < act.cols(); ++b) {
          for (int i = 0; i < ns; ++i) {
            const double gi = g(i, b);
            if (ga) {
              adj[pa](i, b) += gi;
              for (Eigen::Index j = 0; j < m; ++j) adj[pa](ns + i * m + j, b) += gi * act(j, b);
            }
            if (gb) {
              for (Eigen::Index j = 0; j < m; ++j) adj[pb](j, b) += gi * outv(ns + i * m + j, b);
            }
          }
        }
        break;
      }
    }
  }
  return grads;
}

}  // namespace ssp::ad
