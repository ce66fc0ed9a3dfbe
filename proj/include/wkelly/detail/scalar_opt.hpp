#pragma once

#include <cmath>
#include <functional>
#include <utility>

namespace wkelly::detail {

/// Golden-section maximization of a unimodal function on [lo, hi].
/// Returns (argmax, max). `iters` halvings give interval width
/// (hi-lo)*0.618^iters.
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iters = 120) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2; f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1; f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

/// Bisection root of a monotone-decreasing function on [lo, hi].
/// Assumes g(lo) >= 0 >= g(hi); returns the midpoint after `iters` halvings.
template <typename G>
double bisect_decreasing(G&& g, double lo, double hi, int iters = 100) {
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Newton iteration for a strictly increasing C^1 function h on the real
/// line, safeguarded by a bracket [lo, hi] with h(lo) <= 0 <= h(hi).
template <typename H, typename Hp>
double newton_increasing(H&& h, Hp&& hp, double x0, double lo, double hi,
                         double tol, int max_iter = 60) {
  double x = std::fmin(std::fmax(x0, lo), hi);
  for (int it = 0; it < max_iter; ++it) {
    const double hx = h(x);
    if (std::abs(hx) <= tol) return x;
    if (hx > 0.0) hi = x; else lo = x;
    const double d = hp(x);
    double xn = x - hx / d;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // fall back to bisection
    x = xn;
  }
  return x;
}

}  // namespace wkelly::detail
