#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "oscar/errors.hpp"

namespace oscar::ad {

using Array = Eigen::ArrayXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Dense row-major array of rank 0..2.
struct Tensor {
  std::vector<long> shape;
  Array v;

  Tensor() = default;
  Tensor(std::vector<long> s, Array values) : shape(std::move(s)), v(std::move(values)) {
    long n = 1;
    for (long e : shape) {
      if (e <= 0) throw ShapeError("tensor extent must be positive");
      n *= e;
    }
    if (n != v.size()) throw ShapeError("tensor value count does not match shape");
  }

  static Tensor scalar(double x) { return Tensor({}, Array::Constant(1, x)); }
  static Tensor vector(Array x) {
    const long n = x.size();
    return Tensor({n}, std::move(x));
  }
  static Tensor matrix(long rows, long cols, Array x) { return Tensor({rows, cols}, std::move(x)); }
  static Tensor from_mat(const RowMat& m) {
    Tensor t;
    t.shape = {m.rows(), m.cols()};
    t.v = Eigen::Map<const Array>(m.data(), m.size());
    return t;
  }
  static Tensor zeros(std::vector<long> s) {
    long n = 1;
    for (long e : s) n *= e;
    return Tensor(std::move(s), Array::Zero(n));
  }

  int rank() const { return static_cast<int>(shape.size()); }
  long size() const { return v.size(); }
  bool is_scalar() const { return shape.empty(); }
  long rows() const { return rank() >= 1 ? shape[0] : 1; }
  long cols() const { return rank() == 2 ? shape[1] : 1; }

  ConstMatMap mat() const { return ConstMatMap(v.data(), rows(), cols()); }
  MatMap mat() { return MatMap(v.data(), rows(), cols()); }

  double item() const {
    if (v.size() != 1) throw ShapeError("item() on non-scalar tensor");
    return v[0];
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace oscar::ad
