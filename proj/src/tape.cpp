#include "oscar/tape.hpp"

#include <cmath>

namespace oscar::ad {

const Tensor& Var::value() const { return tape->value(*this); }

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kScale: return "scale";
    case Op::kShift: return "shift";
    case Op::kMatmul: return "matmul";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kRelu: return "relu";
    case Op::kSoftplus: return "softplus";
    case Op::kSigmoid: return "sigmoid";
    case Op::kClamp: return "clamp";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kCumsum: return "cumsum";
    case Op::kSlice: return "slice";
    case Op::kConcat: return "concat";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kTranspose: return "transpose";
    case Op::kReshape: return "reshape";
  }
  return "?";
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Tape::Node& Tape::at(Var v) {
  if (!v.defined() || v.tape != this || v.id >= static_cast<int>(nodes_.size()))
    throw ShapeError("var does not belong to this tape");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::at(Var v) const {
  return const_cast<Tape*>(this)->at(v);
}

const Tensor& Tape::value(Var v) const { return at(v).value; }

bool Tape::requires_grad(Var v) const { return at(v).requires_grad; }

Tensor Tape::grad(Var v) const {
  const Node& n = at(v);
  Tensor g;
  g.shape = n.value.shape;
  if (n.grad.size() == n.value.v.size())
    g.v = n.grad;
  else
    g.v = Array::Zero(n.value.v.size());
  return g;
}

Var Tape::leaf(Tensor t, bool requires_grad) {
  Node n;
  n.value = std::move(t);
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  return push(n);
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!same_shape(a, b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

#define OSCAR_BINARY_PROLOGUE(opname)                      \
  const Node& na = at(a);                                  \
  const Node& nb = at(b);                                  \
  check_same_shape(na.value, nb.value, opname);            \
  Node n;                                                  \
  n.requires_grad = na.requires_grad || nb.requires_grad;  \
  n.parents = {a.id, b.id};

Var Tape::add(Var a, Var b) {
  OSCAR_BINARY_PROLOGUE("add")
  n.op = Op::kAdd;
  n.value = Tensor(na.value.shape, na.value.v + nb.value.v);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  OSCAR_BINARY_PROLOGUE("sub")
  n.op = Op::kSub;
  n.value = Tensor(na.value.shape, na.value.v - nb.value.v);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  OSCAR_BINARY_PROLOGUE("mul")
  n.op = Op::kMul;
  n.value = Tensor(na.value.shape, na.value.v * nb.value.v);
  return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
  OSCAR_BINARY_PROLOGUE("div")
  n.op = Op::kDiv;
  n.value = Tensor(na.value.shape, na.value.v / nb.value.v);
  return push(std::move(n));
}

#undef OSCAR_BINARY_PROLOGUE

#define OSCAR_UNARY_PROLOGUE            \
  const Node& na = at(a);               \
  Node n;                               \
  n.requires_grad = na.requires_grad;   \
  n.parents = {a.id};

Var Tape::neg(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kNeg;
  n.value = Tensor(na.value.shape, -na.value.v);
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kScale;
  n.c0 = c;
  n.value = Tensor(na.value.shape, c * na.value.v);
  return push(std::move(n));
}

Var Tape::shift(Var a, double c) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kShift;
  n.c0 = c;
  n.value = Tensor(na.value.shape, na.value.v + c);
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kExp;
  n.value = Tensor(na.value.shape, na.value.v.exp());
  return push(std::move(n));
}

Var Tape::log(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kLog;
  n.value = Tensor(na.value.shape, na.value.v.log());
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kRelu;
  n.value = Tensor(na.value.shape, na.value.v.max(0.0));
  return push(std::move(n));
}

Var Tape::softplus(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kSoftplus;
  // log(1 + e^x), evaluated stably on both tails.
  const Array& x = na.value.v;
  Array out = (x > 0.0).select(x + (-x).exp().log1p(), x.exp().log1p());
  n.value = Tensor(na.value.shape, std::move(out));
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kSigmoid;
  const Array& x = na.value.v;
  Array ex = (-x.abs()).exp();
  Array out = (x >= 0.0).select(1.0 / (1.0 + ex), ex / (1.0 + ex));
  n.value = Tensor(na.value.shape, std::move(out));
  return push(std::move(n));
}

Var Tape::clamp(Var a, double lo, double hi) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kClamp;
  n.c0 = lo;
  n.c1 = hi;
  n.value = Tensor(na.value.shape, na.value.v.max(lo).min(hi));
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kSum;
  n.value = Tensor::scalar(na.value.v.sum());
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  OSCAR_UNARY_PROLOGUE
  n.op = Op::kMean;
  n.value = Tensor::scalar(na.value.v.mean());
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rank() != 2 || nb.value.rank() != 2)
    throw ShapeError("matmul: both operands must be rank 2, got " + na.value.shape_str() +
                     " and " + nb.value.shape_str());
  if (na.value.shape[1] != nb.value.shape[0])
    throw ShapeError("matmul: inner dimensions differ, " + na.value.shape_str() + " x " +
                     nb.value.shape_str());
  Node n;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.parents = {a.id, b.id};
  n.op = Op::kMatmul;
  const long r = na.value.shape[0], m = nb.value.shape[1];
  Tensor out = Tensor::zeros({r, m});
  out.mat().noalias() = na.value.mat() * nb.value.mat();
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::cumsum(Var a, int axis, bool exclusive) {
  const Node& na = at(a);
  const int rank = na.value.rank();
  if (rank < 1 || rank > 2 || axis < 0 || axis >= rank)
    throw ShapeError("cumsum: invalid axis " + std::to_string(axis) + " for " + na.value.shape_str());
  Node n;
  n.requires_grad = na.requires_grad;
  n.parents = {a.id};
  n.op = Op::kCumsum;
  n.i0 = axis;
  n.i1 = exclusive ? 1 : 0;
  const long rows = na.value.rows(), cols = na.value.cols();
  Array out(na.value.v.size());
  auto src = [&](long r, long c) { return na.value.v[r * cols + c]; };
  auto dst = [&](long r, long c) -> double& { return out[r * cols + c]; };
  if (axis == 0 || rank == 1) {
    const long ax_n = rows, other = cols;
    for (long c = 0; c < other; ++c) {
      double acc = 0.0;
      for (long r = 0; r < ax_n; ++r) {
        if (exclusive) {
          dst(r, c) = acc;
          acc += src(r, c);
        } else {
          acc += src(r, c);
          dst(r, c) = acc;
        }
      }
    }
  } else {
    for (long r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (long c = 0; c < cols; ++c) {
        if (exclusive) {
          dst(r, c) = acc;
          acc += src(r, c);
        } else {
          acc += src(r, c);
          dst(r, c) = acc;
        }
      }
    }
  }
  n.value = Tensor(na.value.shape, std::move(out));
  return push(std::move(n));
}

Var Tape::slice(Var a, int axis, long start, long len) {
  const Node& na = at(a);
  const int rank = na.value.rank();
  if (rank < 1 || rank > 2 || axis < 0 || axis >= rank)
    throw ShapeError("slice: invalid axis for " + na.value.shape_str());
  const long extent = na.value.shape[static_cast<size_t>(axis)];
  if (start < 0 || len <= 0 || start + len > extent)
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of bounds for extent " + std::to_string(extent));
  Node n;
  n.requires_grad = na.requires_grad;
  n.parents = {a.id};
  n.op = Op::kSlice;
  n.i0 = axis;
  n.i1 = start;
  n.i2 = len;
  std::vector<long> shape = na.value.shape;
  shape[static_cast<size_t>(axis)] = len;
  const long cols = na.value.cols();
  if (rank == 1 || axis == 0) {
    const long w = (rank == 2) ? cols : 1;
    Array out = na.value.v.segment(start * w, len * w);
    n.value = Tensor(shape, std::move(out));
  } else {
    const long rows = na.value.rows();
    Array out(rows * len);
    for (long r = 0; r < rows; ++r)
      out.segment(r * len, len) = na.value.v.segment(r * cols + start, len);
    n.value = Tensor(shape, std::move(out));
  }
  return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Tensor& first = at(parts[0]).value;
  const int rank = first.rank();
  if (rank < 1 || rank > 2 || axis < 0 || axis >= rank)
    throw ShapeError("concat: invalid axis for " + first.shape_str());
  Node n;
  n.op = Op::kConcat;
  n.i0 = axis;
  long total = 0;
  for (Var p : parts) {
    const Tensor& t = at(p).value;
    if (t.rank() != rank)
      throw ShapeError("concat: rank mismatch");
    for (int d = 0; d < rank; ++d)
      if (d != axis && t.shape[static_cast<size_t>(d)] != first.shape[static_cast<size_t>(d)])
        throw ShapeError("concat: extent mismatch on axis " + std::to_string(d));
    total += t.shape[static_cast<size_t>(axis)];
    n.requires_grad = n.requires_grad || at(p).requires_grad;
    n.parents.push_back(p.id);
  }
  std::vector<long> shape = first.shape;
  shape[static_cast<size_t>(axis)] = total;
  if (rank == 1 || axis == 0) {
    Array out(total * ((rank == 2) ? first.cols() : 1));
    long off = 0;
    for (Var p : parts) {
      const Array& src = at(p).value.v;
      out.segment(off, src.size()) = src;
      off += src.size();
    }
    n.value = Tensor(shape, std::move(out));
  } else {
    const long rows = first.rows();
    Array out(rows * total);
    long col_off = 0;
    for (Var p : parts) {
      const Tensor& t = at(p).value;
      const long w = t.cols();
      for (long r = 0; r < rows; ++r)
        out.segment(r * total + col_off, w) = t.v.segment(r * w, w);
      col_off += w;
    }
    n.value = Tensor(shape, std::move(out));
  }
  return push(std::move(n));
}

Var Tape::broadcast_rows(Var row, long count) {
  const Node& na = at(row);
  if (na.value.rank() == 2 && na.value.shape[0] != 1)
    throw ShapeError("broadcast_rows: input must be a vector or 1-row matrix, got " +
                     na.value.shape_str());
  if (count <= 0) throw ShapeError("broadcast_rows: count must be positive");
  const long m = na.value.size();
  Node n;
  n.requires_grad = na.requires_grad;
  n.parents = {row.id};
  n.op = Op::kBroadcastRows;
  Array out(count * m);
  for (long r = 0; r < count; ++r) out.segment(r * m, m) = na.value.v;
  n.value = Tensor({count, m}, std::move(out));
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Node& na = at(a);
  if (na.value.rank() != 2) throw ShapeError("transpose: rank 2 required");
  Node n;
  n.requires_grad = na.requires_grad;
  n.parents = {a.id};
  n.op = Op::kTranspose;
  Tensor out = Tensor::zeros({na.value.shape[1], na.value.shape[0]});
  out.mat() = na.value.mat().transpose();
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::reshape(Var a, std::vector<long> shape) {
  const Node& na = at(a);
  long total = 1;
  for (long e : shape) total *= e;
  if (total != na.value.size())
    throw ShapeError("reshape: size mismatch " + na.value.shape_str());
  Node n;
  n.requires_grad = na.requires_grad;
  n.parents = {a.id};
  n.op = Op::kReshape;
  n.value = Tensor(std::move(shape), na.value.v);
  return push(std::move(n));
}

Array& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() != n.value.v.size()) n.grad = Array::Zero(n.value.v.size());
  return n.grad;
}

void Tape::accumulate(int id, const Array& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.requires_grad) return;
  grad_buf(id) += g;
}

void Tape::backward(Var output) {
  const Node& out = at(output);
  if (!out.value.is_scalar())
    throw ShapeError("backward: output must be scalar, got " + out.value.shape_str());
  if (out.op == Op::kLeaf && !out.requires_grad)
    throw ShapeError("backward: output has no recorded tape");
  for (Node& n : nodes_) n.grad.resize(0);
  if (!out.requires_grad) return;  // constant graph: all gradients are zero
  grad_buf(output.id)[0] = 1.0;
  for (int id = output.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0 || n.op == Op::kLeaf) continue;
    backward_node(id);
  }
}

void Tape::backward_node(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  const Array& g = n.grad;
  auto parent = [&](int k) -> Node& { return nodes_[static_cast<size_t>(n.parents[static_cast<size_t>(k)])]; };
  auto pid = [&](int k) { return n.parents[static_cast<size_t>(k)]; };
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd:
      accumulate(pid(0), g);
      accumulate(pid(1), g);
      break;
    case Op::kSub:
      accumulate(pid(0), g);
      if (parent(1).requires_grad) accumulate(pid(1), (-g).eval());
      break;
    case Op::kMul:
      if (parent(0).requires_grad) accumulate(pid(0), (g * parent(1).value.v).eval());
      if (parent(1).requires_grad) accumulate(pid(1), (g * parent(0).value.v).eval());
      break;
    case Op::kDiv:
      if (parent(0).requires_grad) accumulate(pid(0), (g / parent(1).value.v).eval());
      if (parent(1).requires_grad)
        accumulate(pid(1), (-g * n.value.v / parent(1).value.v).eval());
      break;
    case Op::kNeg:
      accumulate(pid(0), (-g).eval());
      break;
    case Op::kScale:
      accumulate(pid(0), (n.c0 * g).eval());
      break;
    case Op::kShift:
    case Op::kReshape:
      accumulate(pid(0), g);
      break;
    case Op::kMatmul: {
      const Tensor& a = parent(0).value;
      const Tensor& b = parent(1).value;
      ConstMatMap gm(g.data(), n.value.rows(), n.value.cols());
      if (parent(0).requires_grad) {
        Array da(a.v.size());
        MatMap(da.data(), a.rows(), a.cols()).noalias() = gm * b.mat().transpose();
        accumulate(pid(0), da);
      }
      if (parent(1).requires_grad) {
        Array db(b.v.size());
        MatMap(db.data(), b.rows(), b.cols()).noalias() = a.mat().transpose() * gm;
        accumulate(pid(1), db);
      }
      break;
    }
    case Op::kExp:
      accumulate(pid(0), (g * n.value.v).eval());
      break;
    case Op::kLog:
      accumulate(pid(0), (g / parent(0).value.v).eval());
      break;
    case Op::kRelu:
      accumulate(pid(0), ((parent(0).value.v > 0.0).cast<double>() * g).eval());
      break;
    case Op::kSoftplus: {
      const Array& x = parent(0).value.v;
      Array ex = (-x.abs()).exp();
      Array s = (x >= 0.0).select(1.0 / (1.0 + ex), ex / (1.0 + ex));
      accumulate(pid(0), (g * s).eval());
      break;
    }
    case Op::kSigmoid:
      accumulate(pid(0), (g * n.value.v * (1.0 - n.value.v)).eval());
      break;
    case Op::kClamp: {
      const Array& x = parent(0).value.v;
      Array inside = ((x > n.c0) && (x < n.c1)).cast<double>();
      accumulate(pid(0), (g * inside).eval());
      break;
    }
    case Op::kSum:
      accumulate(pid(0), Array::Constant(parent(0).value.v.size(), g[0]));
      break;
    case Op::kMean:
      accumulate(pid(0),
                 Array::Constant(parent(0).value.v.size(),
                                 g[0] / static_cast<double>(parent(0).value.v.size())));
      break;
    case Op::kCumsum: {
      // Reverse running sum of the incoming gradient along the same axis.
      const Tensor& a = parent(0).value;
      const bool exclusive = n.i1 != 0;
      const int axis = static_cast<int>(n.i0);
      const long rows = a.rows(), cols = a.cols();
      Array da(a.v.size());
      if (axis == 0 || a.rank() == 1) {
        for (long c = 0; c < cols; ++c) {
          double acc = 0.0;
          for (long r = rows - 1; r >= 0; --r) {
            if (exclusive) {
              da[r * cols + c] = acc;
              acc += g[r * cols + c];
            } else {
              acc += g[r * cols + c];
              da[r * cols + c] = acc;
            }
          }
        }
      } else {
        for (long r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (long c = cols - 1; c >= 0; --c) {
            if (exclusive) {
              da[r * cols + c] = acc;
              acc += g[r * cols + c];
            } else {
              acc += g[r * cols + c];
              da[r * cols + c] = acc;
            }
          }
        }
      }
      accumulate(pid(0), da);
      break;
    }
    case Op::kSlice: {
      const Tensor& a = parent(0).value;
      if (!parent(0).requires_grad) break;
      Array da = Array::Zero(a.v.size());
      const int axis = static_cast<int>(n.i0);
      const long start = n.i1, len = n.i2, cols = a.cols();
      if (a.rank() == 1 || axis == 0) {
        const long w = (a.rank() == 2) ? cols : 1;
        da.segment(start * w, len * w) = g;
      } else {
        for (long r = 0; r < a.rows(); ++r)
          da.segment(r * cols + start, len) = g.segment(r * len, len);
      }
      accumulate(pid(0), da);
      break;
    }
    case Op::kConcat: {
      const int axis = static_cast<int>(n.i0);
      if (axis == 0 || n.value.rank() == 1) {
        long off = 0;
        for (size_t k = 0; k < n.parents.size(); ++k) {
          const long sz = nodes_[static_cast<size_t>(n.parents[k])].value.v.size();
          if (nodes_[static_cast<size_t>(n.parents[k])].requires_grad)
            accumulate(n.parents[k], g.segment(off, sz).eval());
          off += sz;
        }
      } else {
        const long rows = n.value.rows(), total = n.value.cols();
        long col_off = 0;
        for (size_t k = 0; k < n.parents.size(); ++k) {
          const Tensor& t = nodes_[static_cast<size_t>(n.parents[k])].value;
          const long w = t.cols();
          if (nodes_[static_cast<size_t>(n.parents[k])].requires_grad) {
            Array da(t.v.size());
            for (long r = 0; r < rows; ++r)
              da.segment(r * w, w) = g.segment(r * total + col_off, w);
            accumulate(n.parents[k], da);
          }
          col_off += w;
        }
      }
      break;
    }
    case Op::kBroadcastRows: {
      const long m = parent(0).value.size();
      const long count = n.value.shape[0];
      Array da = Array::Zero(m);
      for (long r = 0; r < count; ++r) da += g.segment(r * m, m);
      accumulate(pid(0), da);
      break;
    }
    case Op::kTranspose: {
      const Tensor& a = parent(0).value;
      Array da(a.v.size());
      ConstMatMap gm(g.data(), n.value.rows(), n.value.cols());
      MatMap(da.data(), a.rows(), a.cols()) = gm.transpose();
      accumulate(pid(0), da);
      break;
    }
  }
}

}  // namespace oscar::ad
