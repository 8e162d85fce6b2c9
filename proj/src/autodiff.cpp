#include "gpcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gpcn::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activation_value(Activation g, double x) {
  switch (g) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::linear:
      break;
  }
  return x;
}

double activation_derivative(Activation g, double x) {
  switch (g) {
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::linear:
      break;
  }
  return 1.0;
}

Matrix apply_activation(Activation g, Matrix x) {
  if (g == Activation::linear) return x;
  for (double& v : x.values()) v = activation_value(g, v);
  return x;
}

Matrix row_softmax(Matrix x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : r) v /= s;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::record(Matrix value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), Matrix{}, requires_grad, std::move(fn)});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value) { return record(std::move(value), true, nullptr); }

const Tape::Node& Tape::at(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("Tape: invalid variable");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return at(v).value; }

bool Tape::requires_grad(Var v) const { return at(v).requires_grad; }

const Matrix& Tape::grad(Var v) const {
  if (!backward_done_) throw std::logic_error("Tape: gradient requested before backward()");
  // Constants and nodes off the loss path never got a buffer; hand back zeros.
  if (at(v).grad.empty()) return const_cast<Tape*>(this)->grad_buffer(v.id);
  return at(v).grad;
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty() || !loss.valid() || loss.id >= nodes_.size())
    throw std::logic_error("Tape: backward() before any forward operation");
  const Node& l = nodes_[loss.id];
  if (l.value.rows() != 1 || l.value.cols() != 1)
    throw DimensionError("Tape: loss must be 1x1, got " + l.value.shape_string());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.grad = Matrix(n.value.rows(), n.value.cols());
    } else {
      n.grad = Matrix{};
    }
  }
  backward_done_ = true;
  if (!l.requires_grad) return;
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

// ---------------------------------------------------------------------------
// Operations

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.same_shape(bv), "ad::add: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(av + bv, rg, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    if (tp.node_requires_grad(a.id)) tp.grad_buffer(a.id) += g;
    if (tp.node_requires_grad(b.id)) tp.grad_buffer(b.id) += g;
  });
}

Var scale(Tape& t, Var a, double s) {
  return t.record(s * t.value(a), t.requires_grad(a), [a, s](Tape& tp, std::size_t self) {
    Matrix& ga = tp.grad_buffer(a.id);
    const Matrix& g = tp.node_grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += s * g.values()[i];
  });
}

Var add_row_bias(Tape& t, Var x, Var bias) {
  const Matrix& xv = t.value(x);
  const Matrix& bv = t.value(bias);
  require(bv.rows() == 1 && bv.cols() == xv.cols(),
          "ad::add_row_bias: bias " + bv.shape_string() + " does not match " + xv.shape_string());
  Matrix out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bv(0, j);
  }
  const bool rg = t.requires_grad(x) || t.requires_grad(bias);
  return t.record(std::move(out), rg, [x, bias](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    if (tp.node_requires_grad(x.id)) tp.grad_buffer(x.id) += g;
    if (tp.node_requires_grad(bias.id)) {
      Matrix& gb = tp.grad_buffer(bias.id);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = g.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) gb(0, j) += r[j];
      }
    }
  });
}

Var matmul(Tape& t, Var a, Var b, bool trans_a, bool trans_b) {
  Matrix out = gpcn::matmul(t.value(a), trans_a, t.value(b), trans_b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), rg, [a, b, trans_a, trans_b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    const Matrix& av = tp.node_value(a.id);
    const Matrix& bv = tp.node_value(b.id);
    const std::size_t m = g.rows();
    const std::size_t n = g.cols();
    const std::size_t k = trans_a ? av.rows() : av.cols();
    if (tp.node_requires_grad(a.id)) {
      Matrix& ga = tp.grad_buffer(a.id);
      // C = op(A) op(B): dA = G op(B)^T, or (G op(B)^T)^T when A is transposed.
      if (!trans_a)
        gemm(false, !trans_b, m, k, n, 1.0, g.data(), bv.data(), 1.0, ga.data());
      else
        gemm(trans_b, true, k, m, n, 1.0, bv.data(), g.data(), 1.0, ga.data());
    }
    if (tp.node_requires_grad(b.id)) {
      Matrix& gb = tp.grad_buffer(b.id);
      if (!trans_b)
        gemm(!trans_a, false, k, n, m, 1.0, av.data(), g.data(), 1.0, gb.data());
      else
        gemm(true, trans_a, n, k, m, 1.0, g.data(), av.data(), 1.0, gb.data());
    }
  });
}

Var spmm(Tape& t, const SparseMatrix& z, Var x, std::size_t blocks) {
  const Matrix& xv = t.value(x);
  require(blocks > 0 && xv.rows() == blocks * z.cols(),
          "ad::spmm: operand " + xv.shape_string() + " is not " + std::to_string(blocks) +
              " blocks of " + std::to_string(z.cols()) + " rows");
  Matrix out(blocks * z.rows(), xv.cols());
  spmm_raw(z, false, xv.data(), xv.cols(), blocks, out.data(), true);
  const SparseMatrix* zp = &z;
  return t.record(std::move(out), t.requires_grad(x), [zp, x, blocks](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    Matrix& gx = tp.grad_buffer(x.id);
    spmm_raw(*zp, true, g.data(), g.cols(), blocks, gx.data(), true);
  });
}

Var block_matmul(Tape& t, Var a, bool a_batched, bool trans_a, Var x, std::size_t blocks) {
  const Matrix& av = t.value(a);
  const Matrix& xv = t.value(x);
  require(blocks > 0, "ad::block_matmul: zero blocks");
  const std::size_t a_rows = a_batched ? av.rows() / blocks : av.rows();
  require(!a_batched || a_rows * blocks == av.rows(), "ad::block_matmul: ragged batched operand");
  const std::size_t a_cols = av.cols();
  const std::size_t m = trans_a ? a_cols : a_rows;
  const std::size_t k = trans_a ? a_rows : a_cols;
  require(xv.rows() == blocks * k,
          "ad::block_matmul: operand " + xv.shape_string() + " is not " + std::to_string(blocks) +
              " blocks of " + std::to_string(k) + " rows");
  const std::size_t n = xv.cols();
  Matrix out(blocks * m, n);
  const std::size_t a_stride = a_batched ? a_rows * a_cols : 0;
  for (std::size_t b = 0; b < blocks; ++b)
    gemm(trans_a, false, m, n, k, 1.0, av.data() + b * a_stride, xv.data() + b * k * n, 0.0,
         out.data() + b * m * n);
  const bool rg = t.requires_grad(a) || t.requires_grad(x);
  return t.record(std::move(out), rg,
                  [a, x, a_batched, trans_a, blocks, m, n, k, a_rows, a_cols, a_stride](
                      Tape& tp, std::size_t self) {
                    const Matrix& g = tp.node_grad(self);
                    const Matrix& av2 = tp.node_value(a.id);
                    const Matrix& xv2 = tp.node_value(x.id);
                    const bool need_a = tp.node_requires_grad(a.id);
                    const bool need_x = tp.node_requires_grad(x.id);
                    double* ga = need_a ? tp.grad_buffer(a.id).data() : nullptr;
                    double* gx = need_x ? tp.grad_buffer(x.id).data() : nullptr;
                    for (std::size_t b = 0; b < blocks; ++b) {
                      const double* gb = g.data() + b * m * n;
                      const double* xb = xv2.data() + b * k * n;
                      const double* ab = av2.data() + b * a_stride;
                      if (need_x)  // dX_b = op(A_b)^T G_b
                        gemm(!trans_a, false, k, n, m, 1.0, ab, gb, 1.0, gx + b * k * n);
                      if (need_a) {
                        double* gab = ga + b * a_stride;
                        if (!trans_a)  // dA_b = G_b X_b^T
                          gemm(false, true, a_rows, a_cols, n, 1.0, gb, xb, 1.0, gab);
                        else  // dA_b = X_b G_b^T
                          gemm(false, true, a_rows, a_cols, n, 1.0, xb, gb, 1.0, gab);
                      }
                    }
                  });
}

Var activate(Tape& t, Var x, Activation g) {
  if (g == Activation::linear) return x;
  Matrix out = apply_activation(g, t.value(x));
  return t.record(std::move(out), t.requires_grad(x), [x, g](Tape& tp, std::size_t self) {
    const Matrix& go = tp.node_grad(self);
    const Matrix& out_v = tp.node_value(self);
    Matrix& gx = tp.grad_buffer(x.id);
    const auto gov = go.values();
    const auto ov = out_v.values();
    auto gxv = gx.values();
    if (g == Activation::relu) {
      for (std::size_t i = 0; i < gov.size(); ++i)
        if (ov[i] > 0.0) gxv[i] += gov[i];
    } else {
      for (std::size_t i = 0; i < gov.size(); ++i) gxv[i] += gov[i] * ov[i] * (1.0 - ov[i]);
    }
  });
}

Var row_softmax(Tape& t, Var x) {
  Matrix out = row_softmax(t.value(x));
  return t.record(std::move(out), t.requires_grad(x), [x](Tape& tp, std::size_t self) {
    const Matrix& go = tp.node_grad(self);
    const Matrix& s = tp.node_value(self);
    Matrix& gx = tp.grad_buffer(x.id);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      auto sr = s.row(i);
      auto gr = go.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < sr.size(); ++j) dot += sr[j] * gr[j];
      auto xr = gx.row(i);
      for (std::size_t j = 0; j < sr.size(); ++j) xr[j] += sr[j] * (gr[j] - dot);
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "ad::concat_cols: no operands");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  bool rg = false;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "ad::concat_cols: row counts differ");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t.record(std::move(out), rg, [keep](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    std::size_t off = 0;
    for (Var p : keep) {
      const std::size_t c = tp.node_value(p.id).cols();
      if (tp.node_requires_grad(p.id)) {
        Matrix& gp = tp.grad_buffer(p.id);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          auto src = g.row(i);
          auto dst = gp.row(i);
          for (std::size_t j = 0; j < c; ++j) dst[j] += src[off + j];
        }
      }
      off += c;
    }
  });
}

Var sum_all(Tape& t, Var x) {
  Matrix out(1, 1, gpcn::sum(t.value(x)));
  return t.record(std::move(out), t.requires_grad(x), [x](Tape& tp, std::size_t self) {
    const double g = tp.node_grad(self)(0, 0);
    for (double& v : tp.grad_buffer(x.id).values()) v += g;
  });
}

Var sum_squares(Tape& t, Var x) {
  double s = 0.0;
  for (double v : t.value(x).values()) s += v * v;
  return t.record(Matrix(1, 1, s), t.requires_grad(x), [x](Tape& tp, std::size_t self) {
    const double g = tp.node_grad(self)(0, 0);
    const auto xv = tp.node_value(x.id).values();
    auto gx = tp.grad_buffer(x.id).values();
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += 2.0 * g * xv[i];
  });
}

Var mean_squared_error(Tape& t, Var pred, const Matrix& target) {
  const Matrix& p = t.value(pred);
  require(p.same_shape(target), "ad::mean_squared_error: shape mismatch " + p.shape_string() +
                                    " vs " + target.shape_string());
  const double count = static_cast<double>(p.size());
  double s = 0.0;
  Matrix residual = p - target;
  for (double v : residual.values()) s += v * v;
  return t.record(Matrix(1, 1, s / count), t.requires_grad(pred),
                  [pred, residual = std::move(residual), count](Tape& tp, std::size_t self) {
                    const double g = tp.node_grad(self)(0, 0);
                    auto gp = tp.grad_buffer(pred.id).values();
                    const auto r = residual.values();
                    for (std::size_t i = 0; i < r.size(); ++i) gp[i] += 2.0 * g * r[i] / count;
                  });
}

}  // namespace gpcn::ad
