// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "attnpool/matrix.hpp"
#include "attnpool/seed.hpp"

namespace attnpool {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// tape that produced it is alive.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  /// Invalidated by the next node recorded on the tape.
  const Matrix& value() const;
  Shape shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatmul,
  kTranspose,
  kAdd,
  kAddRowBroadcast,
  kScale,
  kTanh,
  kMeanRows,
  kConcatCols,
  kSliceCols,
  kRowSoftmax,
  kStandardizeRows,
  kDropout,
  kSum,
  kNegLogPick,
};

std::string_view op_name(OpKind kind);

/// Define-by-run computation record. Forward ops append nodes in evaluation
/// order; `backward` replays their pullbacks in reverse.
class Tape {
 public:
  /// Receives the node's upstream gradient and its own forward value, and
  /// accumulates into its inputs.
  using Pullback =
      std::function<void(Tape&, const Matrix& upstream, const Matrix& output)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that never receives a gradient.
  Var constant(Matrix value);
  /// Trainable input; its gradient is available after backward().
  Var parameter(Matrix value);

  /// Records an op node. `pullback` may be empty when no input needs a gradient.
  Var record(OpKind kind, Matrix value, bool requires_grad, Pullback pullback);

  const Matrix& value(Var v) const { return nodes_[v.index()].value; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }

  /// Gradient of the last backward() seed w.r.t. `v`; zeros when `v` is not
  /// reachable from the loss.
  Matrix grad(Var v) const;

  /// Adds `delta` to the gradient of `v` (used by pullbacks).
  void accumulate(Var v, const Matrix& delta);
  /// Mutable gradient buffer of `v`, allocated as zeros on first use.
  Matrix& grad_buffer(Var v);

  /// Reverse sweep from a 1x1 loss. The loss gradient is seeded with `seed`.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Pullback pullback;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Differentiable ops. Shapes are checked eagerly and mismatches throw
// ShapeError with both operand shapes in the message.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// x (r x c) plus bias (1 x c) added to every row.
Var add_row_broadcast(Var x, Var bias);
Var scale(Var x, double factor);
Var tanh(Var x);
/// Column-wise mean over rows: (r x c) -> (1 x c).
Var mean_rows(Var x);
/// Horizontal concatenation of equal-height blocks.
Var concat_cols(std::span<const Var> parts);
/// Columns [begin, begin + count) of x.
Var slice_cols(Var x, std::size_t begin, std::size_t count);
/// Numerically stable softmax applied independently to each row.
Var row_softmax(Var x);
/// Per-row zero mean / unit variance, no affine. Constant rows map to zero.
Var standardize_rows(Var x, double epsilon = 1e-5);
/// Inverted dropout. Identity when `training` is false or rate is 0.
/// Throws ConfigError unless 0 <= rate < 1.
Var dropout(Var x, double rate, Rng& rng, bool training);
/// Sum of all entries -> 1x1.
Var sum(Var x);
/// -log(max(x[0, index], floor)) for a 1xN row -> 1x1.
Var neg_log_pick(Var x, std::size_t index, double floor = 1e-12);

namespace testing {

/// Negates the upstream gradient seen by every pullback of `kind` while the
/// guard is alive. Used to check that gradient checking catches broken rules.
class ScopedPullbackFault {
 public:
  explicit ScopedPullbackFault(OpKind kind);
  ~ScopedPullbackFault();
  ScopedPullbackFault(const ScopedPullbackFault&) = delete;
  ScopedPullbackFault& operator=(const ScopedPullbackFault&) = delete;

 private:
  std::optional<OpKind> previous_;
};

}  // namespace testing

}  // namespace attnpool
