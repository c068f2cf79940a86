#include "lossrobust/decision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

constexpr double kArgTol = 1e-8;
constexpr int kMaxExpansions = 8;

}  // namespace

double expected_loss(const Loss& loss, const Posterior& post, double d) {
  const std::vector<double> cuts = loss.sigma_breakpoints(d);
  return expectation(post, [&](double s) { return loss(s, d); }, cuts);
}

double expected_partial(const Loss& loss, Partial which, const Posterior& post, double d) {
  const std::vector<double> cuts = loss.sigma_breakpoints(d);
  return expectation(post, [&](double s) { return loss.partial(which, s, d); }, cuts);
}

Interval default_bracket(const Posterior& post) {
  const double m = posterior_mean(post);
  const double sd = std::max(posterior_sd(post), 1e-12 * std::max(1.0, std::abs(m)));
  return {m - 20.0 * sd, m + 20.0 * sd};
}

BayesAction bayes_action(const Loss& loss, const Posterior& post, std::optional<Interval> bracket) {
  BayesAction out;
  const Interval requested = bracket.value_or(default_bracket(post));
  if (!(requested.hi > requested.lo)) throw DomainError("bayes_action: empty bracket");
  Interval b = loss.clip(requested);

  const auto objective = [&](double d) {
    ++out.evaluations;
    const double v = expected_loss(loss, post, d);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "expected loss of " << loss.label() << " is not finite at d = " << d;
      throw NumericalError(msg.str());
    }
    return v;
  };

  MinimizeResult best;
  bool interior = false;
  for (int expansion = 0; expansion <= kMaxExpansions; ++expansion) {
    best = brent_minimize(objective, b, kArgTol);
    const double edge = 1e-6 * b.width() + 2.0 * (kArgTol + 1.5e-8 * std::abs(best.x));
    const bool at_lo = best.x - b.lo < edge;
    const bool at_hi = b.hi - best.x < edge;
    if (!at_lo && !at_hi) {
      interior = true;
      break;
    }
    // A flat objective touches the edge without a descent direction.
    const double f_lo = objective(b.lo), f_hi = objective(b.hi), f_mid = objective(b.mid());
    const double spread = std::max({f_lo, f_hi, f_mid, best.fx}) - std::min({f_lo, f_hi, f_mid, best.fx});
    if (spread <= 1e-12 * (1.0 + std::abs(best.fx))) break;
    if (expansion == kMaxExpansions) break;
    const double w = b.width();
    const Interval wider = loss.clip({at_lo ? b.lo - w : b.lo, at_hi ? b.hi + w : b.hi});
    if (wider.lo == b.lo && wider.hi == b.hi) break;  // pinned against the action domain
    b = wider;
  }

  // Tie: l^n flat at tolerance level across the bracket.
  {
    const double f_lo = objective(b.lo), f_hi = objective(b.hi), f_mid = objective(b.mid());
    const double spread = std::max({f_lo, f_hi, f_mid, best.fx}) - std::min({f_lo, f_hi, f_mid, best.fx});
    if (spread <= 1e-12 * (1.0 + std::abs(best.fx))) {
      out.action = b.mid();
      out.expected_loss = f_mid;
      out.gradient = expected_partial(loss, Partial::d01, post, out.action);
      out.unique = false;
      return out;
    }
  }
  if (!interior) {
    std::ostringstream msg;
    msg << "bayes_action: no interior minimum of " << loss.label() << " on [" << b.lo << ", " << b.hi
        << "] after " << kMaxExpansions << " doublings";
    throw BracketError(msg.str());
  }

  // Polish on the first-order condition D01 l^n(d) = 0.
  const auto grad = [&](double d) { return expected_partial(loss, Partial::d01, post, d); };
  double action = best.x;
  double step = 1e-7 * (1.0 + std::abs(best.x));
  for (int attempt = 0; attempt < 4; ++attempt, step *= 10.0) {
    const double lo = std::max(b.lo, best.x - step), hi = std::min(b.hi, best.x + step);
    const double glo = grad(lo), ghi = grad(hi);
    if (glo < 0.0 && ghi > 0.0) {
      action = illinois_root(grad, {lo, hi}, 1e-15 * (1.0 + std::abs(best.x)));
      break;
    }
    if (glo == 0.0 || ghi == 0.0) {
      action = glo == 0.0 ? lo : hi;
      break;
    }
  }
  out.action = action;
  out.expected_loss = objective(action);
  if (out.expected_loss > best.fx) {
    // The polish can only move within quadrature noise of the Brent minimum.
    const double slack = 1e-9 * (1.0 + std::abs(best.fx));
    if (out.expected_loss - best.fx > slack) {
      out.action = best.x;
      out.expected_loss = best.fx;
    }
  }
  out.gradient = grad(out.action);

  // D02 l^n only matters once |D01 l^n| exceeds the bare 1e-6 floor.
  if (std::abs(out.gradient) <= 1e-6) return out;
  const double stationarity = 1e-6 * (1.0 + std::abs(expected_partial(loss, Partial::d02, post, out.action)));
  if (std::abs(out.gradient) > stationarity) {
    std::ostringstream msg;
    msg << "bayes_action: |D01 l^n| = " << std::abs(out.gradient) << " exceeds " << stationarity << " at d = "
        << out.action << " for " << loss.label();
    throw NumericalError(msg.str());
  }
  return out;
}

ActionSet action_set(const LossClass& cls, const Posterior& post, std::optional<Interval> bracket) {
  auto from_losses = [&](const std::vector<Loss>& losses) {
    if (losses.empty()) throw DomainError("action_set: empty class");
    ActionSet set;
    bool first = true;
    for (const Loss& l : losses) {
      const BayesAction a = bayes_action(l, post, bracket);
      set.unique = set.unique && a.unique;
      if (first || a.action < set.lower) {
        set.lower = a.action;
        set.lower_label = l.label();
      }
      if (first || a.action > set.upper) {
        set.upper = a.action;
        set.upper_label = l.label();
      }
      first = false;
    }
    return set;
  };
  if (const auto* e = std::get_if<EnvelopeClass>(&cls)) return from_losses({e->upper, e->lower});
  if (const auto* f = std::get_if<FiniteClass>(&cls)) return from_losses(f->losses);
  if (const auto* p = std::get_if<PriorRatioClass>(&cls)) return from_losses(p->members().losses);
  throw DomainError("action_set: defined for envelope, finite and prior-ratio classes only");
}

double diameter(const ActionSet& set) { return set.diameter(); }

}  // namespace lossrobust
