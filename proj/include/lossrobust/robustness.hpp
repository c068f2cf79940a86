#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lossrobust/decision.hpp"

namespace lossrobust {

// ---- finite-n measures ---------------------------------------------------------

// reg_l^n(d) = l^n(d) - l^n(d_l^n); values in [-1e-10, 0) are reported as 0.
double regret(const Loss& loss, const Posterior& post, double d, std::optional<Interval> bracket = std::nullopt);

// Envelope classes reduce to max(reg_U, reg_L); finite classes take the max over members.
double sup_regret(const LossClass& cls, const Posterior& post, double d,
                  std::optional<Interval> bracket = std::nullopt);

// S^n(d) - I^n(d). Throws BandViolation when negative beyond noise.
double range_band(const BandClass& band, const Posterior& post, double d);

// sup - inf of l^n(d) over a finite class.
double range_finite(const FiniteClass& cls, const Posterior& post, double d);

struct RobustnessReport {
  ActionSet action_set;
  double diameter = 0.0;
  double sup_regret = 0.0;
  std::optional<double> range;
  double reference_decision = 0.0;  // Bayes action of l0
};

// All three measures at the Bayes action of l0. The range uses the band when
// given, or the member spread for finite classes.
RobustnessReport robustness_report(const LossClass& cls, const Loss& l0, const Posterior& post,
                                   std::optional<BandClass> band = std::nullopt,
                                   std::optional<Interval> bracket = std::nullopt);

// ---- limit quantities ------------------------------------------------------------

// D11 l / D02 l at (theta, argmin l(theta, .)).
double phi(const Loss& loss, double theta, Interval bracket);

// max - min of argmin l(theta, .) over the class representatives (U, L for envelopes).
double limit_diameter(const LossClass& cls, double theta, Interval bracket);

// reg_l^theta(d0^theta): the limit of the regret of using l0's action under l.
double limit_regret(const Loss& loss, const Loss& l0, double theta, Interval bracket);

// c(l) with sqrt(n) (reg_l^n(d0^n) - reg_l^theta(d0^theta)) -> c(l) Z_theta:
// c(l) = -D01 l(theta, d0) phi(l0) + D10 l(theta, d0) - D10 l(theta, d_l).
double limit_regret_coeff(const Loss& loss, const Loss& l0, double theta, Interval bracket);

// Coefficient of Z_theta^2 in n reg_l^n(d0^n) when l and l0 share their minimizer:
// 0.5 (phi(l0) - phi(l))^2 D02 l(theta, d_l).
double limit_regret_quadform(const Loss& loss, const Loss& l0, double theta, Interval bracket);

// I_theta * Hf(theta) * second moment of F_theta (scalar parameter).
double L_f(double hessian_at_theta, double I_theta, double F_second_moment = 1.0);

struct LimitQuantities {
  double theta = 0.0;
  double I_theta = 1.0;
  double F_theta_second_moment = 1.0;
  std::vector<std::string> labels;
  std::vector<double> phi;           // per loss
  std::vector<double> regret_coeff;  // per loss, NaN when undefined
  std::vector<double> quad_form;     // per loss, NaN unless the minimizer is shared with l0
  double range_first_order = 0.0;    // D10(S-I) - D01(S-I) phi(l0) at (theta, d0)
  double N_S = 0.0;
  double N_I = 0.0;
  double L_S = 0.0;
  double L_I = 0.0;
  double range_at_theta = 0.0;  // S(theta, d0) - I(theta, d0)
};

// Range-process constants for a band [I, S] around l0.
LimitQuantities limit_range_coeffs(const BandClass& band, const Loss& l0, double theta, double I_theta,
                                   Interval bracket, double F_second_moment = 1.0);

// Spread of D10 l(theta, d0) over a finite class sharing the minimizer and the
// value at theta: sqrt(n) ran^n(d0^n) -> (max - min) |Z_theta|.
double limit_range_finite_coeff(const FiniteClass& cls, const Loss& l0, double theta, Interval bracket);

// Per-loss phi, regret coefficient and quadratic form for a class.
LimitQuantities limit_quantities(const LossClass& cls, const Loss& l0, double theta, double I_theta,
                                 Interval bracket, double F_second_moment = 1.0);

}  // namespace lossrobust
