#pragma once

#include "ssp/linalg_ad/types.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace ssp::ad {

// Handle to a node on a Tape. Only meaningful for the tape that created it.
struct Var {
  int id = -1;
};

enum class OpKind {
  Leaf,
  Add,
  Sub,
  Mul,           // elementwise product
  Scale,         // scalar * x
  Axpy,          // x + scalar * y
  MatMul,
  AddColumn,     // broadcast a column vector over every column
  Gelu,          // tanh approximation
  Abs,           // subgradient 0 at 0
  Square,
  Sum,           // all entries to a 1x1 node
  Rows,          // contiguous row block
  ControlAffine  // column-wise f + G(col) * a, see Tape::control_affine
};

struct Node {
  OpKind op = OpKind::Leaf;
  std::array<int, 2> parents{-1, -1};
  Mat value;
  Mat partial;  // local derivative for elementwise unary ops
  double scalar = 0.0;
  int offset = 0;
  int count = 0;
  bool needs_grad = false;
};

class Tape;

// Adjoints of every node with respect to one scalar output.
class Gradients {
 public:
  const Mat& operator[](Var v) const { return adjoint_.at(static_cast<std::size_t>(v.id)); }
  std::size_t size() const { return adjoint_.size(); }

 private:
  friend class Tape;
  std::vector<Mat> adjoint_;
};

// Single-owner recording tape. Nodes are appended in evaluation order, so the
// node list is already a topological order and backward() is a reverse sweep.
class Tape {
 public:
  Var constant(Mat value);
  Var parameter(Mat value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var axpy(Var a, double s, Var b);
  Var matmul(Var a, Var b);
  Var add_column(Var m, Var column);
  Var gelu(Var a);
  Var abs(Var a);
  Var square(Var a);
  Var sum(Var a);
  Var rows(Var a, int first, int count);

  // `out` stacks f (n rows) above g (n*m rows, row-major n x m per column);
  // `actions` is m x B. Result column b is f_b + G_b * a_b.
  Var control_affine(Var out, Var actions, int n_state);

  const Mat& value(Var v) const;
  double scalar_value(Var v) const;
  const Node& node(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Adjoints of a 1x1 output node. Throws DimensionError for non-scalar outputs.
  Gradients backward(Var output) const;

 private:
  Var push(Node n);
  const Node& at(Var v) const;

  std::vector<Node> nodes_;
};

double gelu(double x);
double gelu_derivative(double x);

}  // namespace ssp::ad
