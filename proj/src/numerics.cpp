#include "lossrobust/numerics.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

double checked(const std::function<double(double)>& f, double x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "integrand is not finite at x = " << x;
    throw NumericalError(msg.str());
  }
  return v;
}

}  // namespace

SimpsonResult composite_simpson(const std::function<double(double)>& f, double a, double b,
                                const SimpsonOptions& opts) {
  SimpsonResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  long panels = std::max<long>(2, opts.min_panels);
  if (panels % 2 != 0) ++panels;
  double h = (b - a) / static_cast<double>(panels);

  // Node sums split by Simpson weight class: ends (1), odd (4), interior even (2).
  const double fa = checked(f, a);
  const double fb = checked(f, b);
  double ends = fa + fb;
  double ends_abs = std::abs(fa) + std::abs(fb);
  double odd = 0.0, odd_abs = 0.0, even = 0.0, even_abs = 0.0;
  for (long i = 1; i < panels; ++i) {
    const double v = checked(f, a + static_cast<double>(i) * h);
    if (i % 2 == 1) {
      odd += v;
      odd_abs += std::abs(v);
    } else {
      even += v;
      even_abs += std::abs(v);
    }
  }
  double estimate = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);

  while (panels < opts.max_panels) {
    panels *= 2;
    h *= 0.5;
    even += odd;
    even_abs += odd_abs;
    odd = 0.0;
    odd_abs = 0.0;
    for (long i = 1; i < panels; i += 2) {
      const double v = checked(f, a + static_cast<double>(i) * h);
      odd += v;
      odd_abs += std::abs(v);
    }
    const double refined = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    const double abs_est = std::abs(h) / 3.0 * (ends_abs + 4.0 * odd_abs + 2.0 * even_abs);
    if (std::abs(refined - estimate) <= opts.rel_tol * abs_est) {
      out.value = refined;
      out.abs_value = abs_est;
      out.panels = panels;
      out.converged = true;
      return out;
    }
    estimate = refined;
  }
  out.value = estimate;
  out.panels = panels;
  return out;
}

MinimizeResult brent_minimize(const std::function<double(double)>& f, Interval bracket, double abs_tol,
                              int max_iter) {
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2
  const double rel = std::sqrt(std::numeric_limits<double>::epsilon());
  double a = std::min(bracket.lo, bracket.hi);
  double b = std::max(bracket.lo, bracket.hi);
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  int evals = 1;

  for (int iter = 0; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol = rel * std::abs(x) + abs_tol / 3.0;
    const double tol2 = 2.0 * tol;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;

    bool golden = true;
    if (std::abs(e) > tol) {
      // Parabola through (v, fv), (w, fw), (x, fx).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol : -tol;
        golden = false;
      }
    }
    if (golden) {
      e = (x < m) ? b - x : a - x;
      d = kGolden * e;
    }
    const double u = (std::abs(d) >= tol) ? x + d : x + (d > 0.0 ? tol : -tol);
    const double fu = f(u);
    ++evals;
    if (!std::isfinite(fu)) {
      std::ostringstream msg;
      msg << "objective is not finite at " << u;
      throw NumericalError(msg.str());
    }
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, evals};
}

double bisect_root(const std::function<double(double)>& f, Interval bracket, double abs_tol, int max_iter) {
  double lo = bracket.lo, hi = bracket.hi;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream msg;
    msg << "no sign change on [" << lo << ", " << hi << "]";
    throw BracketError(msg.str());
  }
  for (int i = 0; i < max_iter && hi - lo > abs_tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double illinois_root(const std::function<double(double)>& f, Interval bracket, double abs_tol, int max_iter) {
  double a = bracket.lo, b = bracket.hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream msg;
    msg << "no sign change on [" << a << ", " << b << "]";
    throw BracketError(msg.str());
  }
  int side = 0;
  double c = a;
  for (int i = 0; i < max_iter; ++i) {
    c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
    if (std::abs(b - a) <= abs_tol) break;
    const double fc = f(c);
    if (fc == 0.0) return c;
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
    if (std::abs(b - a) <= abs_tol) break;
  }
  return c;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

}  // namespace lossrobust
