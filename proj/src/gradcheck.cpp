#include "oscar/gradcheck.hpp"

#include <cmath>
#include <numeric>

#include "oscar/rng.hpp"

namespace oscar::ad {

GradCheckReport check_gradient(const ScalarFn& f, const Tensor& x, double eps, double rel_tol,
                               long max_coords, uint64_t seed) {
  if (eps <= 0) throw ShapeError("check_gradient: eps must be positive");
  GradCheckReport rep;

  Tape tape;
  Var in = tape.leaf(x, true);
  Var out = f(tape, in);
  tape.backward(out);
  const Tensor analytic = tape.grad(in);
  if (!out.value().v.allFinite()) {
    rep.note = "non-finite function value at x";
    return rep;
  }

  auto eval = [&](const Tensor& p) {
    Tape t;
    Var v = t.leaf(p, false);
    return f(t, v).item();
  };

  std::vector<long> coords(static_cast<size_t>(x.size()));
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords > 0 && max_coords < x.size()) {
    Rng rng(seed ^ 0xc0ffee);
    for (long i = 0; i < max_coords; ++i) {
      const long j = i + static_cast<long>(rng.uniform_int(static_cast<uint64_t>(x.size() - i)));
      std::swap(coords[static_cast<size_t>(i)], coords[static_cast<size_t>(j)]);
    }
    coords.resize(static_cast<size_t>(max_coords));
  }

  Tensor probe = x;
  for (long i : coords) {
    const double x0 = probe.v[i];
    probe.v[i] = x0 + eps;
    const double fp = eval(probe);
    probe.v[i] = x0 - eps;
    const double fm = eval(probe);
    probe.v[i] = x0;
    const double fd = (fp - fm) / (2.0 * eps);
    const double ga = analytic.v[i];
    if (!std::isfinite(fd) || !std::isfinite(ga)) {
      rep.max_rel_err = std::numeric_limits<double>::infinity();
      rep.worst_index = i;
      rep.note = "non-finite value at coordinate " + std::to_string(i);
      rep.n_checked++;
      rep.pass = false;
      return rep;
    }
    const double denom = std::max({std::abs(ga), std::abs(fd), 1e-6});
    const double rel = std::abs(ga - fd) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_index = i;
    }
    rep.n_checked++;
  }
  rep.pass = rep.max_rel_err < rel_tol;
  return rep;
}

}  // namespace oscar::ad
