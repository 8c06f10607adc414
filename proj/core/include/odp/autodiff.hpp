#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "odp/linalg.hpp"

namespace odp {

/// Handle into a Tape. Cheap to copy; valid only for the tape that made it.
struct Tensor {
  std::int32_t id = -1;
};

/// Reverse-mode tape over 2D matrices (vectors are 1 x n). Operations
/// record eagerly-evaluated forward values; backward() walks the record in
/// reverse insertion order exactly once, which makes gradients bit-
/// deterministic for identical tapes. A tape is single-threaded; run
/// independent tapes for concurrency.
class Tape {
 public:
  /// When set, ste_threshold computes the identity forward (the gradient
  /// surrogate path). Used by finite-difference checks; training leaves it
  /// off.
  bool ste_identity_forward = false;

  Tensor leaf(const Matrix& m);
  Tensor scalar(double v);

  Tensor matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  Tensor add_rowvec(Tensor a, Tensor row);  // broadcast (1 x n) over rows
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);  // elementwise
  Tensor scalar_mul(Tensor a, double s);
  Tensor sigmoid(Tensor a);
  Tensor relu(Tensor a);
  Tensor log(Tensor a);  // rejects non-positive entries
  Tensor softmax(Tensor a);  // rowwise
  Tensor l2_norm_sq(Tensor a);  // sum of squares -> scalar
  Tensor mean(Tensor a);        // mean over all entries -> scalar
  Tensor mean_rows(Tensor a);   // (m x n) -> (1 x n)
  Tensor gather_rows(Tensor a, std::span<const int> rows);
  Tensor slice_cols(Tensor a, int offset, int len);

  /// Forward identity, backward contributes zero to all ancestors.
  Tensor stop_gradient(Tensor a);

  /// Straight-through threshold: forward 1{p > 0.5} (strict; ties at
  /// exactly 0.5 map to 0), backward identity.
  Tensor ste_threshold(Tensor p);

  /// Mean over rows of -log softmax(logits)[label].
  Tensor cross_entropy(Tensor logits, std::span<const int> labels);

  /// Mean over rows of sum_j p log(p/q), with both probability tensors
  /// clamped to [1e-7, 1] against log underflow. Clamped entries receive
  /// zero gradient.
  Tensor kl_div(Tensor p, Tensor q);

  void backward(Tensor loss);

  const Matrix& value(Tensor t) const { return nodes_[t.id].val; }
  /// Gradient buffer; populated after backward().
  const Matrix& grad(Tensor t) const { return nodes_[t.id].grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, MatMul, Add, AddRowVec, Sub, Mul, ScalarMul, Sigmoid, Relu, Log,
    Softmax, L2NormSq, Mean, MeanRows, GatherRows, SliceCols, StopGrad, Ste,
    CrossEntropy, KlDiv,
  };
  struct Node {
    Op op = Op::Leaf;
    Matrix val;
    Matrix grad;
    std::int32_t p0 = -1, p1 = -1;
    std::vector<int> idx;  // gather rows / class labels
    double s = 0.0;        // scalar_mul factor
    int a0 = 0, a1 = 0;    // slice offset / length
  };
  std::vector<Node> nodes_;

  Tensor push(Node&& n);
  void backprop(Node& n);
};

/// Central finite differences on `build` (which must construct the loss
/// from the given parameter leaves on the supplied tape), compared against
/// reverse-mode gradients. Returns the max relative error over all
/// parameter entries; entries where both gradients are below 1e-6 in
/// magnitude are treated as matching.
double grad_check(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& build,
    std::vector<Matrix> params, double eps);

}  // namespace odp
