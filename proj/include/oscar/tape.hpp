#pragma once

#include <cstdint>
#include <vector>

#include "oscar/tensor.hpp"

namespace oscar::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; invalidated if the tape dies.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool defined() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  double item() const { return value().item(); }
};

// Define-by-run reverse-mode tape over dense tensors. Single-threaded;
// appending order is a topological order, so the backward sweep is a plain
// reverse iteration and is bit-deterministic.
class Tape {
 public:
  Var leaf(Tensor t, bool requires_grad = false);
  Var constant(double x) { return leaf(Tensor::scalar(x), false); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);       // c * a
  Var shift(Var a, double c);       // a + c
  Var matmul(Var a, Var b);         // (n,k) x (k,m) -> (n,m)
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var sigmoid(Var a);
  Var clamp(Var a, double lo, double hi);
  Var square(Var a) { return mul(a, a); }
  Var sum(Var a);
  Var mean(Var a);
  // Running sum along `axis` of a rank-1/2 tensor. Exclusive: out_i = sum_{j<i} x_j.
  Var cumsum(Var a, int axis = 0, bool exclusive = false);
  Var slice(Var a, int axis, long start, long len);
  Var concat(const std::vector<Var>& parts, int axis);
  Var broadcast_rows(Var row, long n);  // (m) or (1,m) -> (n,m)
  Var transpose(Var a);
  Var reshape(Var a, std::vector<long> shape);

  // Backpropagate d(output)/d(node) for a scalar output. Clears previous
  // gradients first, so repeated calls are bit-identical.
  void backward(Var output);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() target w.r.t. v. Zero tensor if v was
  // not reached or does not require grad.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;
  size_t size() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    kLeaf, kAdd, kSub, kMul, kDiv, kNeg, kScale, kShift, kMatmul,
    kExp, kLog, kRelu, kSoftplus, kSigmoid, kClamp, kSum, kMean,
    kCumsum, kSlice, kConcat, kBroadcastRows, kTranspose, kReshape,
  };

  struct Node {
    Tensor value;
    Array grad;  // allocated on demand during backward
    Op op = Op::kLeaf;
    bool requires_grad = false;
    double c0 = 0, c1 = 0;  // op constants (scale factor, clamp bounds, ...)
    long i0 = 0, i1 = 0, i2 = 0;  // op indices (axis, start, len, ...)
    std::vector<int> parents;
  };

  static const char* op_name(Op op);
  Var push(Node n);
  Node& at(Var v);
  const Node& at(Var v) const;
  Array& grad_buf(int id);
  void accumulate(int id, const Array& g);
  void backward_node(int id);

  std::vector<Node> nodes_;
};

}  // namespace oscar::ad
