#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gpcn/linalg.hpp"

namespace gpcn::ad {

enum class Activation { linear, relu, sigmoid };

// Handle to a node recorded on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

// Records matrix-valued operations in execution order; backward() walks them
// in reverse. Sparse operands are captured by reference and must outlive any
// backward pass over the tape.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Var constant(Matrix value);
  Var variable(Matrix value);

  const Matrix& value(Var v) const;
  // Gradient of the last backward() loss w.r.t. v; zero if v was not reached.
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  void backward(Var loss);

  // Building blocks for operations.
  Var record(Matrix value, bool requires_grad, BackwardFn fn);
  Matrix& grad_buffer(std::size_t id);  // allocates zeros on first use
  const Matrix& node_value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& node_grad(std::size_t id) const { return nodes_[id].grad; }
  bool node_requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  const Node& at(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
// x (r x c) + bias (1 x c) broadcast over rows.
Var add_row_bias(Tape& t, Var x, Var bias);
Var matmul(Tape& t, Var a, Var b, bool trans_a = false, bool trans_b = false);
// z applied to each of `blocks` stacked row-blocks of x.
Var spmm(Tape& t, const SparseMatrix& z, Var x, std::size_t blocks = 1);
// out_b = op(A_b) x_b for each block b. A is either one shared matrix or
// `blocks` stacked matrices (a_batched).
Var block_matmul(Tape& t, Var a, bool a_batched, bool trans_a, Var x, std::size_t blocks);
Var activate(Tape& t, Var x, Activation g);
Var row_softmax(Tape& t, Var x);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var sum_all(Tape& t, Var x);
Var sum_squares(Tape& t, Var x);
Var mean_squared_error(Tape& t, Var pred, const Matrix& target);

// Plain evaluations shared by the tape kernels and by callers that only need
// values.
double activation_value(Activation g, double x);
double activation_derivative(Activation g, double x);
Matrix apply_activation(Activation g, Matrix x);
Matrix row_softmax(Matrix x);

}  // namespace gpcn::ad
