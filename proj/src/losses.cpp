#include "lossrobust/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

double first_step(double x) { return std::max(1.0, std::abs(x)) * 1e-5; }
double second_step(double x) { return std::max(1.0, std::abs(x)) * 1e-4; }

double indicator_weight(bool above, double k_above, double k_below) { return above ? k_above : k_below; }

}  // namespace

Loss::Loss(std::string label, BivariateFn eval) : label_(std::move(label)), eval_(std::move(eval)) {}

Loss& Loss::with_partial(Partial which, BivariateFn fn) {
  partials_[index(which)] = std::move(fn);
  return *this;
}

Loss& Loss::with_kink(Kink kink) {
  kinks_.push_back(std::move(kink));
  return *this;
}

Loss& Loss::with_action_domain(Interval domain) {
  if (!(domain.hi > domain.lo)) throw DomainError("action domain must be a nonempty interval");
  domain_ = domain;
  return *this;
}

Interval Loss::clip(Interval bracket) const {
  const Interval out{std::max(bracket.lo, domain_.lo), std::min(bracket.hi, domain_.hi)};
  if (!(out.hi > out.lo)) throw DomainError("bracket lies outside the action domain of " + label_);
  return out;
}

double Loss::partial(Partial which, double sigma, double d) const {
  if (const auto& fn = partials_[index(which)]) return fn(sigma, d);
  return numeric_partial(which, sigma, d);
}

double Loss::numeric_partial(Partial which, double sigma, double d) const {
  const auto& l = eval_;
  // Near an edge of the action domain the stencil is moved inward by up to one step.
  const auto inside = [&](double h) { return std::clamp(d, domain_.lo + h, domain_.hi - h); };
  switch (which) {
    case Partial::d01: {
      const double h = first_step(d);
      d = inside(h);
      return (l(sigma, d + h) - l(sigma, d - h)) / (2.0 * h);
    }
    case Partial::d10: {
      const double h = first_step(sigma);
      return (l(sigma + h, d) - l(sigma - h, d)) / (2.0 * h);
    }
    case Partial::d02: {
      const double h = second_step(d);
      d = inside(h);
      return (l(sigma, d + h) - 2.0 * l(sigma, d) + l(sigma, d - h)) / (h * h);
    }
    case Partial::d20: {
      const double h = second_step(sigma);
      return (l(sigma + h, d) - 2.0 * l(sigma, d) + l(sigma - h, d)) / (h * h);
    }
    case Partial::d11: {
      const double hs = second_step(sigma);
      const double hd = second_step(d);
      d = inside(hd);
      return (l(sigma + hs, d + hd) - l(sigma + hs, d - hd) - l(sigma - hs, d + hd) + l(sigma - hs, d - hd)) /
             (4.0 * hs * hd);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> Loss::sigma_breakpoints(double d) const {
  std::vector<double> out;
  out.reserve(kinks_.size());
  for (const auto& k : kinks_) out.push_back(k.sigma_at(d));
  return out;
}

bool Loss::near_kink(double sigma, double d, double tol) const {
  return std::any_of(kinks_.begin(), kinks_.end(),
                     [&](const Kink& k) { return std::abs(sigma - k.sigma_at(d)) < tol; });
}

Loss Loss::scaled(double c, std::string label) const {
  Loss out = *this;
  out.label_ = label.empty() ? label_ + " (x" + std::to_string(c) + ")" : std::move(label);
  out.eval_ = [f = eval_, c](double s, double d) { return c * f(s, d); };
  for (auto& p : out.partials_) {
    if (p) p = [f = p, c](double s, double d) { return c * f(s, d); };
  }
  return out;
}

FiniteClass PriorRatioClass::members() const {
  FiniteClass out;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    out.losses.push_back(prior_ratio_to_loss(priors[i], w0, a, "prior[" + std::to_string(i) + "]"));
  }
  if (out.losses.empty()) throw DomainError("prior-ratio class has no priors");
  return out;
}

BandClass PriorRatioClass::as_band() const {
  if (!band) throw DomainError("prior-ratio class has no density band");
  return {prior_ratio_to_loss(band->first, w0, a, "I: w_I/w0"), prior_ratio_to_loss(band->second, w0, a, "S: w_S/w0"),
          prior_ratio_to_loss(w0, w0, a, "l0")};
}

std::vector<Loss> representatives(const LossClass& cls) {
  if (const auto* e = std::get_if<EnvelopeClass>(&cls)) return {e->upper, e->lower, e->l0};
  if (const auto* b = std::get_if<BandClass>(&cls)) return {b->inf, b->sup, b->l0};
  if (const auto* f = std::get_if<FiniteClass>(&cls)) {
    if (f->losses.empty()) throw DomainError("finite class must be nonempty");
    return f->losses;
  }
  const auto& p = std::get<PriorRatioClass>(cls);
  std::vector<Loss> out = p.members().losses;
  if (p.band) {
    const BandClass b = p.as_band();
    out.push_back(b.inf);
    out.push_back(b.sup);
  }
  return out;
}

// ---- constructors ------------------------------------------------------------

namespace {

Loss half_square_loss() {
  Loss l0("l0: 0.5(d-s)^2", [](double s, double d) { return 0.5 * (d - s) * (d - s); });
  l0.with_partial(Partial::d01, [](double s, double d) { return d - s; })
      .with_partial(Partial::d10, [](double s, double d) { return s - d; })
      .with_partial(Partial::d02, [](double, double) { return 1.0; })
      .with_partial(Partial::d11, [](double, double) { return -1.0; })
      .with_partial(Partial::d20, [](double, double) { return 1.0; });
  return l0;
}

Loss weighted_half_square(std::string label, double k_above, double k_below) {
  auto m = [k_above, k_below](double s, double d) { return indicator_weight(d >= s, k_above, k_below); };
  Loss l(std::move(label), [m](double s, double d) { return m(s, d) * 0.5 * (d - s) * (d - s); });
  l.with_partial(Partial::d01, [m](double s, double d) { return m(s, d) * (d - s); })
      .with_partial(Partial::d10, [m](double s, double d) { return -m(s, d) * (d - s); })
      .with_partial(Partial::d02, [m](double s, double d) { return m(s, d); })
      .with_partial(Partial::d11, [m](double s, double d) { return -m(s, d); })
      .with_partial(Partial::d20, [m](double s, double d) { return m(s, d); })
      .with_kink({[](double d) { return d; }});
  return l;
}

}  // namespace

EnvelopeClass make_asymmetric_quadratic(double k1, double k2, Symmetry symmetric) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw DomainError("asymmetric quadratic: k1 and k2 must be positive");
  if (k1 > k2 || (k1 == k2 && symmetric == Symmetry::reject)) {
    throw DomainError("asymmetric quadratic: requires 0 < k1 < k2");
  }
  std::ostringstream u, l;
  u << "U: (" << k2 << "{d>=s}+" << k1 << "{d<s}) l0";
  l << "L: (" << k1 << "{d>=s}+" << k2 << "{d<s}) l0";
  EnvelopeClass cls{weighted_half_square(u.str(), k2, k1), weighted_half_square(l.str(), k1, k2), half_square_loss(),
                    std::nullopt};
  cls.anchor = [](double s) { return s; };
  return cls;
}

BandClass asymmetric_quadratic_band(double k1, double k2) {
  if (!(k1 > 0.0) || k1 > k2) throw DomainError("asymmetric quadratic band: requires 0 < k1 <= k2");
  const Loss l0 = half_square_loss();
  std::ostringstream i, s;
  i << "I: " << k1 << " l0";
  s << "S: " << k2 << " l0";
  return {l0.scaled(k1, i.str()), l0.scaled(k2, s.str()), l0};
}

DamLosses make_dam_losses() {
  static const double kLog10 = std::log(10.0);
  auto check = [](double s, double d) {
    if (!(s > 0.0) || d < 0.0) {
      std::ostringstream msg;
      msg << "dam loss evaluated outside sigma > 0, d >= 0 (sigma = " << s << ", d = " << d << ")";
      throw DomainError(msg.str());
    }
  };
  auto base = [check](double s, double d) {
    check(s, d);
    return 10.0 * d + 100.0 / s * std::exp(-d * s);
  };
  Loss l0("l0: 10d + 100 exp(-d s)/s", base);
  l0.with_partial(Partial::d01, [check](double s, double d) {
    check(s, d);
    return 10.0 - 100.0 * std::exp(-d * s);
  });
  l0.with_partial(Partial::d02, [check](double s, double d) {
    check(s, d);
    return 100.0 * s * std::exp(-d * s);
  });
  l0.with_partial(Partial::d10, [check](double s, double d) {
    check(s, d);
    return -100.0 * std::exp(-d * s) * (1.0 / (s * s) + d / s);
  });
  l0.with_partial(Partial::d11, [check](double s, double d) {
    check(s, d);
    return 100.0 * d * std::exp(-d * s);
  });
  l0.with_partial(Partial::d20, [check](double s, double d) {
    check(s, d);
    return 100.0 * std::exp(-d * s) * (2.0 / (s * s * s) + 2.0 * d / (s * s) + d * d / s);
  });

  Loss upper("U: (Phi(ds - log 10) + 0.5) l0",
             [base](double s, double d) { return (normal_cdf(d * s - kLog10) + 0.5) * base(s, d); });
  Loss lower("L: (1.5 - Phi(ds - log 10)) l0",
             [base](double s, double d) { return (1.5 - normal_cdf(d * s - kLog10)) * base(s, d); });

  const Interval admissible{0.0, std::numeric_limits<double>::infinity()};
  l0.with_action_domain(admissible);
  upper.with_action_domain(admissible);
  lower.with_action_domain(admissible);

  DamLosses out;
  out.l0 = l0;
  out.finite = FiniteClass{{upper, lower}};
  out.envelope = EnvelopeClass{upper, lower, l0, std::nullopt};
  out.band = BandClass{l0.scaled(0.5, "I: 0.5 l0"), l0.scaled(1.5, "S: 1.5 l0"), l0};
  return out;
}

Loss make_translation_loss(const ScalarFunction& fn) {
  if (!fn.f) throw DomainError("translation loss needs f");
  if (std::abs(fn.f(0.0)) > 1e-12) throw DomainError("translation loss: f(0) must be 0");
  for (int i = -100; i <= 100; ++i) {
    const double t = 0.1 * i;
    if (fn.f(t) < -1e-12) {
      std::ostringstream msg;
      msg << "translation loss: f(" << t << ") < 0";
      throw DomainError(msg.str());
    }
  }
  Loss l(fn.label.empty() ? "f(d-s)" : fn.label, [f = fn.f](double s, double d) { return f(d - s); });
  if (fn.df) {
    l.with_partial(Partial::d01, [g = fn.df](double s, double d) { return g(d - s); });
    l.with_partial(Partial::d10, [g = fn.df](double s, double d) { return -g(d - s); });
  }
  if (fn.d2f) {
    l.with_partial(Partial::d02, [g = fn.d2f](double s, double d) { return g(d - s); });
    l.with_partial(Partial::d11, [g = fn.d2f](double s, double d) { return -g(d - s); });
    l.with_partial(Partial::d20, [g = fn.d2f](double s, double d) { return g(d - s); });
  }
  for (double t : fn.kinks) l.with_kink({[t](double d) { return d - t; }});
  return l;
}

ScalarFunction smooth_exponential_function() {
  return {[](double t) { return std::exp(-t) + t - 1.0; },
          [](double t) { return 1.0 - std::exp(-t); },
          [](double t) { return std::exp(-t); },
          [](double t) { return -std::exp(-t); },
          "exp(-t)+t-1",
          {}};
}

ScalarFunction reflect(const ScalarFunction& fn) {
  ScalarFunction out;
  out.f = [f = fn.f](double t) { return f(-t); };
  if (fn.df) out.df = [g = fn.df](double t) { return -g(-t); };
  if (fn.d2f) out.d2f = [g = fn.d2f](double t) { return g(-t); };
  if (fn.d3f) out.d3f = [g = fn.d3f](double t) { return -g(-t); };
  out.label = fn.label + " reflected";
  for (double k : fn.kinks) out.kinks.push_back(-k);
  return out;
}

ScalarFunction square_function() {
  return {[](double t) { return t * t; }, [](double t) { return 2.0 * t; }, [](double) { return 2.0; },
          [](double) { return 0.0; }, "t^2", {}};
}

EnvelopeClass make_smooth_envelope() {
  ScalarFunction f = smooth_exponential_function();
  ScalarFunction g = reflect(f);
  f.label = "f(d-s), f(t)=exp(-t)+t-1";
  g.label = "f(s-d), f(t)=exp(-t)+t-1";
  // D01 f(d - s) <= d - s <= D01 f(s - d): the reflected loss is the upper envelope.
  return EnvelopeClass{make_translation_loss(g), make_translation_loss(f), half_square_loss(), std::nullopt};
}

Loss prior_ratio_to_loss(const Density& w, const Density& w0, const std::function<double(double)>& a,
                         std::string label) {
  auto ratio = [w, w0](double s) {
    const double base = w0(s);
    if (!(base > 0.0)) {
      std::ostringstream msg;
      msg << "prior ratio: base density w0 vanishes at sigma = " << s;
      throw DomainError(msg.str());
    }
    return w(s) / base;
  };
  Loss l(std::move(label), [ratio, a](double s, double d) {
    const double e = d - a(s);
    return e * e * ratio(s);
  });
  l.with_partial(Partial::d01, [ratio, a](double s, double d) { return 2.0 * (d - a(s)) * ratio(s); });
  l.with_partial(Partial::d02, [ratio](double s, double) { return 2.0 * ratio(s); });
  return l;
}

std::optional<double> pointwise_minimizer(const Loss& loss, double sigma, Interval bracket) {
  const auto f = [&](double d) { return loss(sigma, d); };
  try {
    Interval b = loss.clip(bracket);
    for (int expansion = 0; expansion <= 8; ++expansion) {
      const MinimizeResult r = brent_minimize(f, b, 1e-10);
      const double edge = 1e-7 * std::max(1.0, b.width());
      const bool at_lo = r.x - b.lo < edge && f(b.lo) <= r.fx;
      const bool at_hi = b.hi - r.x < edge && f(b.hi) <= r.fx;
      if (!at_lo && !at_hi) {
        // Polish on the first-order condition when it changes sign nearby.
        const auto g = [&](double d) { return loss.d01(sigma, d); };
        const double step = std::max(1e-6, 1e-6 * std::abs(r.x));
        try {
          const Interval near = loss.clip({r.x - step, r.x + step});
          const double lo = near.lo, hi = near.hi;
          const double glo = g(lo), ghi = g(hi);
          if (glo < 0.0 && ghi > 0.0) return bisect_root(g, {lo, hi}, 1e-14 * std::max(1.0, std::abs(r.x)));
        } catch (const Error&) {
        }
        return r.x;
      }
      if (expansion == 8) break;
      const double w = b.width();
      const Interval wider = loss.clip({at_lo ? b.lo - w : b.lo, at_hi ? b.hi + w : b.hi});
      if (wider.lo == b.lo && wider.hi == b.hi) break;
      b = wider;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

// ---- audits ------------------------------------------------------------------

namespace {

template <class Fn>
void scan_box(const AuditBox& box, Fn&& fn) {
  const int n = std::max(2, box.points);
  for (int i = 0; i < n; ++i) {
    const double s = box.sigma.lo + box.sigma.width() * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double d = box.d.lo + box.d.width() * j / (n - 1);
      fn(s, d);
    }
  }
}

void record(OrderingAudit& audit, double lhs, double rhs, double tol, double s, double d) {
  const double excess = lhs - rhs;
  if (excess > tol * (1.0 + std::abs(lhs) + std::abs(rhs))) {
    audit.holds = false;
    if (excess > audit.worst_violation) {
      audit.worst_violation = excess;
      audit.sigma_at = s;
      audit.d_at = d;
    }
  }
}

}  // namespace

OrderingAudit audit_envelope(const EnvelopeClass& cls, const AuditBox& box, double tol) {
  OrderingAudit audit;
  scan_box(box, [&](double s, double d) {
    const double lo = cls.lower.d01(s, d);
    const double mid = cls.l0.d01(s, d);
    const double hi = cls.upper.d01(s, d);
    record(audit, lo, mid, tol, s, d);
    record(audit, mid, hi, tol, s, d);
  });
  return audit;
}

OrderingAudit audit_band(const BandClass& cls, const AuditBox& box, double tol) {
  OrderingAudit audit;
  scan_box(box, [&](double s, double d) {
    const double lo = cls.inf(s, d);
    const double mid = cls.l0(s, d);
    const double hi = cls.sup(s, d);
    record(audit, lo, mid, tol, s, d);
    record(audit, mid, hi, tol, s, d);
  });
  return audit;
}

DerivativeAudit audit_derivatives(const Loss& loss, const AuditBox& box, int samples, unsigned long long seed,
                                  double rel_tol, double kink_exclusion) {
  DerivativeAudit audit;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(box.sigma.lo, box.sigma.hi), ud(box.d.lo, box.d.hi);
  constexpr Partial kAll[] = {Partial::d01, Partial::d10, Partial::d02, Partial::d11, Partial::d20};
  for (int i = 0; i < samples; ++i) {
    const double s = us(rng);
    const double d = ud(rng);
    if (loss.near_kink(s, d, kink_exclusion)) {
      ++audit.skipped_near_kink;
      continue;
    }
    for (Partial p : kAll) {
      if (!loss.has_analytic(p)) continue;
      const double exact = loss.partial(p, s, d);
      const double approx = loss.numeric_partial(p, s, d);
      const double err = std::abs(exact - approx) / std::max(1.0, std::abs(exact));
      ++audit.checked;
      if (err > audit.worst_rel_error) {
        audit.worst_rel_error = err;
        audit.worst_partial = p;
      }
    }
  }
  audit.passes = audit.worst_rel_error <= rel_tol;
  return audit;
}

// ---- diagnostics ------------------------------------------------------------

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::flagged: return "flagged";
    case CheckStatus::unchecked: return "unchecked";
  }
  return "?";
}

const AssumptionCheck& DiagnosticReport::check(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return c;
  }
  throw DomainError("no diagnostic named " + id);
}

namespace {

std::optional<double> try_eval(const Loss& l, double s, double d) {
  try {
    const double v = l(s, d);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

}  // namespace

DiagnosticReport class_diagnostics(const LossClass& cls, double theta, std::span<const double> eta_grid,
                                   std::optional<DiagnosticOptions> maybe_opts) {
  DiagnosticOptions opts = maybe_opts.value_or(DiagnosticOptions{});
  if (!maybe_opts || !(opts.compact.hi > opts.compact.lo)) opts.compact = {theta - 3.0, theta + 3.0};
  const Interval K = opts.compact;
  const int n_grid = std::max(3, opts.grid_points);
  const double spacing = K.width() / (n_grid - 1);

  DiagnosticReport report;
  report.theta = theta;
  report.eta_grid.assign(eta_grid.begin(), eta_grid.end());
  report.kappa.assign(eta_grid.size(), std::numeric_limits<double>::infinity());
  report.inf_abs_d02 = std::numeric_limits<double>::infinity();

  const std::vector<Loss> reps = representatives(cls);
  std::ostringstream fail_1a, witness_1c, kink_1c;
  bool ok_1a = true;
  bool any_kink = false;
  double sup_abs_d02 = 0.0, sup_abs_d11 = 0.0;
  double sup_inf_on_K = -std::numeric_limits<double>::infinity();

  for (const Loss& loss : reps) {
    LossDiagnostic diag;
    diag.label = loss.label();
    diag.kappa.assign(eta_grid.size(), std::numeric_limits<double>::infinity());

    double inf_on_K = std::numeric_limits<double>::infinity();
    double grid_argmin = K.mid();
    for (int j = 0; j < n_grid; ++j) {
      const double d = K.lo + spacing * j;
      if (auto v = try_eval(loss, theta, d); v && *v < inf_on_K) {
        inf_on_K = *v;
        grid_argmin = d;
      }
    }

    const auto found = pointwise_minimizer(loss, theta, K);
    const bool located = found && K.contains(*found);
    // Without a located minimizer, kappa is still reported around the grid argmin.
    const double dmin_value = located ? *found : grid_argmin;
    const double* dmin = &dmin_value;
    if (!std::isfinite(inf_on_K) && !located) {
      ok_1a = false;
      fail_1a << loss.label() << ": l(theta, .) not evaluable on K; ";
      report.losses.push_back(diag);
      continue;
    }
    const double lmin = located ? loss(theta, *dmin) : inf_on_K;
    inf_on_K = std::min(inf_on_K, lmin);
    sup_inf_on_K = std::max(sup_inf_on_K, inf_on_K);
    if (located) {
      diag.minimizer_found = true;
      diag.minimizer = *dmin;
    } else {
      ok_1a = false;
      fail_1a << loss.label() << ": no minimizer of l(theta, .) inside K; ";
    }

    // Uniqueness: every grid point at least two spacings away is strictly worse.
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_grid; ++j) {
      const double d = K.lo + spacing * j;
      if (std::abs(d - *dmin) < 2.0 * spacing) continue;
      if (auto v = try_eval(loss, theta, d)) gap = std::min(gap, *v - lmin);
    }
    if (located && !(gap > 1e-12 * (1.0 + std::abs(lmin)))) {
      ok_1a = false;
      fail_1a << loss.label() << ": minimizer not unique (gap " << gap << "); ";
    }

    for (std::size_t k = 0; k < eta_grid.size(); ++k) {
      const double eta = eta_grid[k];
      double kappa = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n_grid; ++j) {
        const double d = K.lo + spacing * j;
        if (std::abs(d - *dmin) < eta) continue;
        if (auto v = try_eval(loss, theta, d)) kappa = std::min(kappa, *v - lmin);
      }
      for (double d : {*dmin - eta, *dmin + eta}) {
        if (!K.contains(d)) continue;
        if (auto v = try_eval(loss, theta, d)) kappa = std::min(kappa, *v - lmin);
      }
      diag.kappa[k] = std::max(0.0, kappa);
      report.kappa[k] = std::min(report.kappa[k], diag.kappa[k]);
    }

    if (!located) {
      report.losses.push_back(diag);
      continue;
    }
    diag.on_kink = loss.near_kink(theta, *dmin, 1e-3);
    if (diag.on_kink) {
      any_kink = true;
      kink_1c << loss.label() << ": D02 does not exist at (theta, " << *dmin << "), registered kink; ";
    } else {
      diag.d02 = loss.d02(theta, *dmin);
      diag.d11 = loss.d11(theta, *dmin);
      report.inf_abs_d02 = std::min(report.inf_abs_d02, std::abs(diag.d02));
      sup_abs_d02 = std::max(sup_abs_d02, std::abs(diag.d02));
      sup_abs_d11 = std::max(sup_abs_d11, std::abs(diag.d11));
    }
    report.losses.push_back(diag);
  }

  report.checks.push_back({"1a", ok_1a ? CheckStatus::pass : CheckStatus::fail,
                           ok_1a ? "unique minimizer of l(theta, .) in K for every representative" : fail_1a.str()});
  report.checks.push_back({"1b", CheckStatus::unchecked, "needs a neighborhood V_theta; not constructed"});

  if (any_kink) {
    report.checks.push_back({"1c", CheckStatus::flagged, kink_1c.str()});
  } else {
    const bool finite = std::isfinite(sup_abs_d02) && std::isfinite(sup_abs_d11);
    const bool ok = finite && report.inf_abs_d02 > opts.singular_tol && std::isfinite(report.inf_abs_d02);
    witness_1c << "inf |D02| = " << report.inf_abs_d02 << ", sup |D02| = " << sup_abs_d02
               << ", sup |D11| = " << sup_abs_d11;
    report.checks.push_back({"1c", ok ? CheckStatus::pass : CheckStatus::fail, witness_1c.str()});
  }
  report.checks.push_back({"1d", CheckStatus::unchecked, "equicontinuity is not verified"});
  report.checks.push_back({"1e", CheckStatus::unchecked, "needs dominating functions rho_eta; not constructed"});

  // 1f: best value on K against values outside K near theta (a band of width |K| on each side).
  {
    double outside = std::numeric_limits<double>::infinity();
    int evaluated = 0;
    const int ns = 21;
    for (const Loss& loss : reps) {
      for (int i = 0; i < ns; ++i) {
        const double s = theta - opts.ball_radius + 2.0 * opts.ball_radius * i / (ns - 1);
        for (int j = 1; j <= n_grid; ++j) {
          const double off = K.width() * j / n_grid;
          for (double d : {K.lo - off, K.hi + off}) {
            if (auto v = try_eval(loss, s, d)) {
              outside = std::min(outside, *v);
              ++evaluated;
            }
          }
        }
      }
    }
    std::ostringstream w;
    w << "sup_l inf_K l(theta, d) = " << sup_inf_on_K << " vs inf outside K near theta = " << outside;
    CheckStatus st = evaluated == 0 ? CheckStatus::unchecked
                                    : (sup_inf_on_K < outside ? CheckStatus::pass : CheckStatus::fail);
    report.checks.push_back({"1f", st, w.str()});
  }

  {
    std::ostringstream w;
    bool ok = !report.kappa.empty();
    for (std::size_t k = 0; k < eta_grid.size(); ++k) {
      w << "kappa(" << eta_grid[k] << ") = " << report.kappa[k] << "; ";
      if (!(report.kappa[k] > 0.0)) ok = false;
    }
    if (eta_grid.empty()) w << "empty eta grid";
    report.checks.push_back({"1g", ok ? CheckStatus::pass : CheckStatus::fail, w.str()});
  }
  return report;
}

}  // namespace lossrobust
