#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace lossrobust {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Standard normal density and distribution function.
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct SimpsonResult {
  double value = 0.0;
  double abs_value = 0.0;  // Simpson estimate of the integral of |f|
  long panels = 0;
  bool converged = false;
};

struct SimpsonOptions {
  double rel_tol = 1e-9;
  long min_panels = 16;
  long max_panels = 1L << 20;
};

// Composite Simpson on [a, b], halving the panel width until two successive
// estimates differ by less than rel_tol times the integral of |f|. Previously
// computed nodes are reused at each halving.
SimpsonResult composite_simpson(const std::function<double(double)>& f, double a, double b,
                                const SimpsonOptions& opts = {});

struct MinimizeResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

// Brent's method: golden-section search with parabolic acceleration on [lo, hi].
// abs_tol is the argument tolerance; a relative term sqrt(eps)*|x| is added.
MinimizeResult brent_minimize(const std::function<double(double)>& f, Interval bracket,
                              double abs_tol = 1e-8, int max_iter = 500);

// Bisection for a sign change of f on [lo, hi]; throws BracketError without one.
double bisect_root(const std::function<double(double)>& f, Interval bracket, double abs_tol = 1e-12,
                   int max_iter = 400);

// Illinois (modified regula falsi) root of f on [lo, hi] given a sign change.
double illinois_root(const std::function<double(double)>& f, Interval bracket, double abs_tol = 1e-14,
                     int max_iter = 100);

// Median and quartiles (linear interpolation between order statistics).
double quantile(std::vector<double> values, double p);

}  // namespace lossrobust
