// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attnpool/error.hpp"

namespace attnpool {

namespace {

thread_local std::optional<OpKind> g_faulty_op;

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw Error(std::string(op) + ": operands live on different tapes");
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRowBroadcast: return "add_row_broadcast";
    case OpKind::kScale: return "scale";
    case OpKind::kTanh: return "tanh";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kStandardizeRows: return "standardize_rows";
    case OpKind::kDropout: return "dropout";
    case OpKind::kSum: return "sum";
    case OpKind::kNegLogPick: return "neg_log_pick";
  }
  return "unknown";
}

Var Tape::constant(Matrix value) { return record(OpKind::kLeaf, std::move(value), false, {}); }

Var Tape::parameter(Matrix value) { return record(OpKind::kLeaf, std::move(value), true, {}); }

Var Tape::record(OpKind kind, Matrix value, bool requires_grad, Pullback pullback) {
  if (backward_done_) throw Error("tape: cannot record after backward()");
  nodes_.push_back(Node{kind, std::move(value), Matrix{}, requires_grad, std::move(pullback)});
  return Var(this, nodes_.size() - 1);
}

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[v.index()];
  if (node.grad.shape() != node.value.shape()) return Matrix(node.value.shape());
  return node.grad;
}

Matrix& Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.index()];
  if (node.grad.shape() != node.value.shape()) node.grad = Matrix(node.value.shape());
  return node.grad;
}

void Tape::accumulate(Var v, const Matrix& delta) { grad_buffer(v) += delta; }

void Tape::backward(Var loss, double seed) {
  if (&loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (loss.shape() != Shape{1, 1}) {
    throw ShapeError("backward: loss must be 1x1, got " + loss.shape().str());
  }
  if (backward_done_) throw Error("backward: already called on this tape");
  backward_done_ = true;
  grad_buffer(loss)(0, 0) += seed;
  // Pullbacks only write to strictly earlier nodes and nothing is recorded
  // during the sweep, so node references stay valid.
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.pullback || !node.requires_grad || node.grad.shape() != node.value.shape()) {
      continue;
    }
    if (g_faulty_op && *g_faulty_op == node.kind) {
      Matrix flipped = node.grad;
      flipped *= -1.0;
      node.pullback(*this, flipped, node.value);
    } else {
      node.pullback(*this, node.grad, node.value);
    }
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Tape& t = a.tape();
  Matrix out = matmul(a.value(), b.value());
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Tape::Pullback pb;
  if (rg) {
    pb = [a, b](Tape& tape, const Matrix& g, const Matrix&) {
      if (tape.requires_grad(a)) matmul_nt_acc(g, b.value(), tape.grad_buffer(a));
      if (tape.requires_grad(b)) matmul_tn_acc(a.value(), g, tape.grad_buffer(b));
    };
  }
  return t.record(OpKind::kMatmul, std::move(out), rg, std::move(pb));
}

Var transpose(Var a) {
  Tape& t = a.tape();
  const bool rg = t.requires_grad(a);
  Tape::Pullback pb;
  if (rg) {
    pb = [a](Tape& tape, const Matrix& g, const Matrix&) { tape.accumulate(a, transpose(g)); };
  }
  return t.record(OpKind::kTranspose, transpose(a.value()), rg, std::move(pb));
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + a.shape().str() + " vs " + b.shape().str());
  }
  Tape& t = a.tape();
  Matrix out = a.value();
  out += b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Tape::Pullback pb;
  if (rg) {
    pb = [a, b](Tape& tape, const Matrix& g, const Matrix&) {
      if (tape.requires_grad(a)) tape.accumulate(a, g);
      if (tape.requires_grad(b)) tape.accumulate(b, g);
    };
  }
  return t.record(OpKind::kAdd, std::move(out), rg, std::move(pb));
}

Var add_row_broadcast(Var x, Var bias) {
  require_same_tape(x, bias, "add_row_broadcast");
  if (bias.shape().rows != 1 || bias.shape().cols != x.shape().cols) {
    throw ShapeError("add_row_broadcast: " + x.shape().str() + " + bias " + bias.shape().str());
  }
  Tape& t = x.tape();
  Matrix out = x.value();
  const Matrix& b = bias.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b(0, c);
  const bool rg = t.requires_grad(x) || t.requires_grad(bias);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, bias](Tape& tape, const Matrix& g, const Matrix&) {
      if (tape.requires_grad(x)) tape.accumulate(x, g);
      if (tape.requires_grad(bias)) {
        Matrix& gb = tape.grad_buffer(bias);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      }
    };
  }
  return t.record(OpKind::kAddRowBroadcast, std::move(out), rg, std::move(pb));
}

Var scale(Var x, double factor) {
  Tape& t = x.tape();
  Matrix out = x.value();
  out *= factor;
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, factor](Tape& tape, const Matrix& g, const Matrix&) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
    };
  }
  return t.record(OpKind::kScale, std::move(out), rg, std::move(pb));
}

Var tanh(Var x) {
  Tape& t = x.tape();
  Matrix out = x.value();
  for (double& v : out.values()) v = std::tanh(v);
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x](Tape& tape, const Matrix& g, const Matrix& y) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
    };
  }
  return t.record(OpKind::kTanh, std::move(out), rg, std::move(pb));
}

Var mean_rows(Var x) {
  const Matrix& xv = x.value();
  if (xv.rows() == 0) throw ShapeError("mean_rows: input " + xv.shape().str() + " has no rows");
  Tape& t = x.tape();
  Matrix out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(0, c) += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows());
  out *= inv;
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, inv](Tape& tape, const Matrix& g, const Matrix&) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t r = 0; r < gx.rows(); ++r)
        for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += inv * g(0, c);
    };
  }
  return t.record(OpKind::kMeanRows, std::move(out), rg, std::move(pb));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().shape().rows;
  std::size_t cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_cols");
    if (p.shape().rows != rows) {
      throw ShapeError("concat_cols: " + parts.front().shape().str() + " vs " + p.shape().str());
    }
    cols += p.shape().cols;
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  Tape::Pullback pb;
  if (rg) {
    pb = [inputs = std::vector<Var>(parts.begin(), parts.end())](Tape& tape, const Matrix& g,
                                                                  const Matrix&) {
      std::size_t off = 0;
      for (const Var& p : inputs) {
        const std::size_t w = p.shape().cols;
        if (tape.requires_grad(p)) {
          Matrix& gp = tape.grad_buffer(p);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < w; ++c) gp(r, c) += g(r, off + c);
        }
        off += w;
      }
    };
  }
  return t.record(OpKind::kConcatCols, std::move(out), rg, std::move(pb));
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Matrix& xv = x.value();
  if (begin + count > xv.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + xv.shape().str());
  }
  Tape& t = x.tape();
  Matrix out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, begin + c);
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, begin](Tape& tape, const Matrix& g, const Matrix&) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gx(r, begin + c) += g(r, c);
    };
  }
  return t.record(OpKind::kSliceCols, std::move(out), rg, std::move(pb));
}

Var row_softmax(Var x) {
  Tape& t = x.tape();
  Matrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x](Tape& tape, const Matrix& g, const Matrix& y) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - dot);
      }
    };
  }
  return t.record(OpKind::kRowSoftmax, std::move(out), rg, std::move(pb));
}

Var standardize_rows(Var x, double epsilon) {
  Tape& t = x.tape();
  const Matrix& xv = x.value();
  Matrix out(xv.shape());
  std::vector<double> inv_std(xv.rows());
  const double n = static_cast<double>(xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = (in[c] - mean) * inv_std[r];
  }
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, inv_std = std::move(inv_std)](Tape& tape, const Matrix& g, const Matrix& y) {
      Matrix& gx = tape.grad_buffer(x);
      const double cols = static_cast<double>(y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double mean_g = 0.0;
        double mean_gy = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
          mean_g += g(r, c);
          mean_gy += g(r, c) * y(r, c);
        }
        mean_g /= cols;
        mean_gy /= cols;
        for (std::size_t c = 0; c < y.cols(); ++c) {
          gx(r, c) += inv_std[r] * (g(r, c) - mean_g - y(r, c) * mean_gy);
        }
      }
    };
  }
  return t.record(OpKind::kStandardizeRows, std::move(out), rg, std::move(pb));
}

Var dropout(Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  Tape& t = x.tape();
  const bool active = training && rate > 0.0;
  Matrix mask(x.shape(), 1.0);
  if (active) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask.values()) m = uniform(rng) >= rate ? keep_scale : 0.0;
  }
  Matrix out = x.value();
  if (active) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  }
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x, mask = std::move(mask)](Tape& tape, const Matrix& g, const Matrix&) {
      Matrix& gx = tape.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    };
  }
  return t.record(OpKind::kDropout, std::move(out), rg, std::move(pb));
}

Var sum(Var x) {
  Tape& t = x.tape();
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg) {
    pb = [x](Tape& tape, const Matrix& g, const Matrix&) {
      Matrix& gx = tape.grad_buffer(x);
      for (double& v : gx.values()) v += g(0, 0);
    };
  }
  return t.record(OpKind::kSum, Matrix(1, 1, total), rg, std::move(pb));
}

Var neg_log_pick(Var x, std::size_t index, double floor) {
  const Matrix& xv = x.value();
  if (xv.rows() != 1) throw ShapeError("neg_log_pick: expected a row, got " + xv.shape().str());
  if (index >= xv.cols()) {
    throw IndexError("neg_log_pick: index " + std::to_string(index) + " out of range for " +
                     xv.shape().str());
  }
  Tape& t = x.tape();
  const double p = xv(0, index);
  const bool clamped = !(p > floor);
  const double loss = -std::log(clamped ? floor : p);
  const bool rg = t.requires_grad(x);
  Tape::Pullback pb;
  if (rg && !clamped) {
    pb = [x, index, p](Tape& tape, const Matrix& g, const Matrix&) {
      tape.grad_buffer(x)(0, index) += -g(0, 0) / p;
    };
  }
  return t.record(OpKind::kNegLogPick, Matrix(1, 1, loss), rg, std::move(pb));
}

namespace testing {

ScopedPullbackFault::ScopedPullbackFault(OpKind kind) : previous_(g_faulty_op) {
  g_faulty_op = kind;
}

ScopedPullbackFault::~ScopedPullbackFault() { g_faulty_op = previous_; }

}  // namespace testing

}  // namespace attnpool
