#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace semilab::detail {

// Root of an increasing scalar function inside the bracket [lo, hi] with
// f(lo) < 0 < f(hi). `eval(x)` returns {f(x), f'(x)}; f may be +inf, which
// only shrinks the bracket. Newton steps are accepted when they stay inside the
// bracket, otherwise the bracket is bisected. Starting from hi makes Newton on a
// convex function approach from above.
template <class Eval>
double increasing_root(Eval&& eval, double lo, double hi, double rel_tol = 1e-15, int max_iterations = 400) {
  double x = hi;
  for (int it = 0; it < max_iterations; ++it) {
    const auto [v, d] = eval(x);
    if (v == 0.0) return x;
    if (v > 0.0)
      hi = x;
    else
      lo = x;
    double next = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(v) && d > 0.0) next = x - v / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double scale = std::max(std::abs(next), std::numeric_limits<double>::min());
    if (std::abs(next - x) <= rel_tol * scale || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))
      return next;
    x = next;
  }
  return x;
}

}  // namespace semilab::detail
