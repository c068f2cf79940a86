#include "lossrobust/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

constexpr double kClamp = 1e-10;
constexpr double kSharedMinimizer = 1e-6;

double clamp_measure(double value, double scale, const char* what) {
  if (value >= 0.0) return value;
  if (value >= -kClamp * std::max(1.0, std::abs(scale))) return 0.0;
  std::ostringstream msg;
  msg << what << " is negative beyond numerical noise: " << value;
  throw NumericalError(msg.str());
}

double minimizer_or_throw(const Loss& loss, double theta, Interval bracket) {
  const auto d = pointwise_minimizer(loss, theta, bracket);
  if (!d) {
    std::ostringstream msg;
    msg << "no minimizer of " << loss.label() << "(theta = " << theta << ", .) in [" << bracket.lo << ", "
        << bracket.hi << "]";
    throw BracketError(msg.str());
  }
  return *d;
}

double phi_at(const Loss& loss, double theta, double d) {
  if (loss.near_kink(theta, d, 1e-3)) {
    std::ostringstream msg;
    msg << "phi: D02 " << loss.label() << " does not exist at (" << theta << ", " << d
        << "), a registered kink (assumption 1c)";
    throw SingularError(msg.str());
  }
  const double d02 = loss.d02(theta, d);
  if (!(std::abs(d02) > 1e-10)) {
    std::ostringstream msg;
    msg << "phi: |D02 " << loss.label() << "(" << theta << ", " << d << ")| = " << std::abs(d02)
        << " is singular (assumption 1c)";
    throw SingularError(msg.str());
  }
  return loss.d11(theta, d) / d02;
}

std::vector<Loss> action_members(const LossClass& cls) {
  if (const auto* e = std::get_if<EnvelopeClass>(&cls)) return {e->upper, e->lower};
  if (const auto* f = std::get_if<FiniteClass>(&cls)) return f->losses;
  if (const auto* p = std::get_if<PriorRatioClass>(&cls)) return p->members().losses;
  throw DomainError("defined for envelope, finite and prior-ratio classes only");
}

}  // namespace

double regret(const Loss& loss, const Posterior& post, double d, std::optional<Interval> bracket) {
  const BayesAction best = bayes_action(loss, post, bracket);
  const double at_d = expected_loss(loss, post, d);
  return clamp_measure(at_d - best.expected_loss, at_d, "regret");
}

double sup_regret(const LossClass& cls, const Posterior& post, double d, std::optional<Interval> bracket) {
  double worst = 0.0;
  for (const Loss& l : action_members(cls)) worst = std::max(worst, regret(l, post, d, bracket));
  return worst;
}

double range_band(const BandClass& band, const Posterior& post, double d) {
  const double s = expected_loss(band.sup, post, d);
  const double i = expected_loss(band.inf, post, d);
  const double r = s - i;
  if (r < 0.0) {
    if (r >= -kClamp * std::max(1.0, std::abs(s))) return 0.0;
    std::ostringstream msg;
    msg << "range_band: S^n(d) - I^n(d) = " << r << " < 0 at d = " << d;
    throw BandViolation(msg.str());
  }
  return r;
}

double range_finite(const FiniteClass& cls, const Posterior& post, double d) {
  if (cls.losses.empty()) throw DomainError("range_finite: empty class");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Loss& l : cls.losses) {
    const double v = expected_loss(l, post, d);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

RobustnessReport robustness_report(const LossClass& cls, const Loss& l0, const Posterior& post,
                                   std::optional<BandClass> band, std::optional<Interval> bracket) {
  RobustnessReport rep;
  rep.reference_decision = bayes_action(l0, post, bracket).action;
  rep.action_set = action_set(cls, post, bracket);
  rep.diameter = rep.action_set.diameter();
  rep.sup_regret = sup_regret(cls, post, rep.reference_decision, bracket);
  if (band) {
    rep.range = range_band(*band, post, rep.reference_decision);
  } else if (const auto* f = std::get_if<FiniteClass>(&cls)) {
    rep.range = range_finite(*f, post, rep.reference_decision);
  }
  return rep;
}

double phi(const Loss& loss, double theta, Interval bracket) {
  return phi_at(loss, theta, minimizer_or_throw(loss, theta, bracket));
}

double limit_diameter(const LossClass& cls, double theta, Interval bracket) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Loss& l : action_members(cls)) {
    const double d = minimizer_or_throw(l, theta, bracket);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi - lo;
}

double limit_regret(const Loss& loss, const Loss& l0, double theta, Interval bracket) {
  const double d0 = minimizer_or_throw(l0, theta, bracket);
  const double dl = minimizer_or_throw(loss, theta, bracket);
  return clamp_measure(loss(theta, d0) - loss(theta, dl), loss(theta, d0), "limit regret");
}

double limit_regret_coeff(const Loss& loss, const Loss& l0, double theta, Interval bracket) {
  const double d0 = minimizer_or_throw(l0, theta, bracket);
  const double dl = minimizer_or_throw(loss, theta, bracket);
  const double phi0 = phi_at(l0, theta, d0);
  return -loss.d01(theta, d0) * phi0 + loss.d10(theta, d0) - loss.d10(theta, dl);
}

double limit_regret_quadform(const Loss& loss, const Loss& l0, double theta, Interval bracket) {
  const double d0 = minimizer_or_throw(l0, theta, bracket);
  const double dl = minimizer_or_throw(loss, theta, bracket);
  if (std::abs(d0 - dl) > kSharedMinimizer * std::max(1.0, std::abs(d0))) {
    std::ostringstream msg;
    msg << "quadratic regret limit needs a shared minimizer: d0 = " << d0 << ", d_l = " << dl
        << "; use the sqrt(n) coefficient (limit_regret_coeff) instead";
    throw PreconditionError(msg.str());
  }
  const double diff = phi_at(l0, theta, d0) - phi_at(loss, theta, dl);
  return 0.5 * diff * diff * loss.d02(theta, dl);
}

double L_f(double hessian_at_theta, double I_theta, double F_second_moment) {
  return I_theta * hessian_at_theta * F_second_moment;
}

LimitQuantities limit_range_coeffs(const BandClass& band, const Loss& l0, double theta, double I_theta,
                                   Interval bracket, double F_second_moment) {
  LimitQuantities q;
  q.theta = theta;
  q.I_theta = I_theta;
  q.F_theta_second_moment = F_second_moment;
  const double d0 = minimizer_or_throw(l0, theta, bracket);
  const double phi0 = phi_at(l0, theta, d0);
  const Loss& S = band.sup;
  const Loss& I = band.inf;
  q.range_first_order = (S.d10(theta, d0) - I.d10(theta, d0)) - (S.d01(theta, d0) - I.d01(theta, d0)) * phi0;
  auto N = [&](const Loss& l) {
    return phi0 * phi0 * l.d02(theta, d0) + l.d20(theta, d0) - 2.0 * l.d11(theta, d0) * phi0;
  };
  q.N_S = N(S);
  q.N_I = N(I);
  q.L_S = L_f(S.d20(theta, d0), I_theta, F_second_moment);
  q.L_I = L_f(I.d20(theta, d0), I_theta, F_second_moment);
  q.range_at_theta = S(theta, d0) - I(theta, d0);
  q.labels = {I.label(), S.label()};
  return q;
}

double limit_range_finite_coeff(const FiniteClass& cls, const Loss& l0, double theta, Interval bracket) {
  const double d0 = minimizer_or_throw(l0, theta, bracket);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Loss& l : cls.losses) {
    const double c = l.d10(theta, d0);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return hi - lo;
}

LimitQuantities limit_quantities(const LossClass& cls, const Loss& l0, double theta, double I_theta,
                                 Interval bracket, double F_second_moment) {
  LimitQuantities q;
  if (const auto* b = std::get_if<BandClass>(&cls)) {
    q = limit_range_coeffs(*b, l0, theta, I_theta, bracket, F_second_moment);
  }
  q.theta = theta;
  q.I_theta = I_theta;
  q.F_theta_second_moment = F_second_moment;
  q.labels.clear();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const Loss& l : representatives(cls)) {
    q.labels.push_back(l.label());
    try {
      q.phi.push_back(phi(l, theta, bracket));
    } catch (const SingularError&) {
      q.phi.push_back(nan);
    }
    try {
      q.regret_coeff.push_back(limit_regret_coeff(l, l0, theta, bracket));
    } catch (const SingularError&) {
      q.regret_coeff.push_back(nan);
    }
    try {
      q.quad_form.push_back(limit_regret_quadform(l, l0, theta, bracket));
    } catch (const Error&) {
      q.quad_form.push_back(nan);
    }
  }
  return q;
}

}  // namespace lossrobust
