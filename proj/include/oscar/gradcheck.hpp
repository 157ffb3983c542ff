#pragma once

#include <functional>
#include <string>

#include "oscar/tape.hpp"

namespace oscar::ad {

struct GradCheckReport {
  double max_rel_err = 0.0;
  long worst_index = -1;
  long n_checked = 0;
  bool pass = false;
  std::string note;
};

// Builds a scalar expression from the single input leaf.
using ScalarFn = std::function<Var(Tape&, Var)>;

// Compares reverse-mode gradients of f against central differences
// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps), coordinate by coordinate.
// max_coords > 0 checks a deterministic random subset (for large inputs).
GradCheckReport check_gradient(const ScalarFn& f, const Tensor& x, double eps, double rel_tol,
                               long max_coords = -1, uint64_t seed = 0);

}  // namespace oscar::ad
