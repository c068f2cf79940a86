#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lossrobust/numerics.hpp"

namespace lossrobust {

using BivariateFn = std::function<double(double sigma, double d)>;

enum class Partial { d01, d10, d02, d11, d20 };

// A non-smooth locus of a loss, written as sigma = sigma_at(d).
struct Kink {
  std::function<double(double d)> sigma_at;
};

// A nonnegative loss l(sigma, d) with its partial derivatives. Partials without
// an analytic form fall back to central finite differences: first order with
// step max(1, |x|) * 1e-5, second order with step max(1, |x|) * 1e-4.
class Loss {
 public:
  Loss() = default;
  Loss(std::string label, BivariateFn eval);

  Loss& with_partial(Partial which, BivariateFn fn);
  Loss& with_kink(Kink kink);
  // Decisions outside this interval are inadmissible; brackets are clipped to it.
  Loss& with_action_domain(Interval domain);

  double operator()(double sigma, double d) const { return eval_(sigma, d); }
  double partial(Partial which, double sigma, double d) const;
  double d01(double sigma, double d) const { return partial(Partial::d01, sigma, d); }
  double d10(double sigma, double d) const { return partial(Partial::d10, sigma, d); }
  double d02(double sigma, double d) const { return partial(Partial::d02, sigma, d); }
  double d11(double sigma, double d) const { return partial(Partial::d11, sigma, d); }
  double d20(double sigma, double d) const { return partial(Partial::d20, sigma, d); }

  // Central-difference value regardless of whether an analytic form exists.
  double numeric_partial(Partial which, double sigma, double d) const;

  bool has_analytic(Partial which) const { return static_cast<bool>(partials_[index(which)]); }
  const std::string& label() const { return label_; }
  std::span<const Kink> kinks() const { return kinks_; }

  // sigma values at which l(., d) is not smooth.
  std::vector<double> sigma_breakpoints(double d) const;
  bool near_kink(double sigma, double d, double tol) const;

  const Interval& action_domain() const { return domain_; }
  Interval clip(Interval bracket) const;

  // c * l, partials and kinks carried over.
  Loss scaled(double c, std::string label = {}) const;

 private:
  static std::size_t index(Partial p) { return static_cast<std::size_t>(p); }

  std::string label_;
  BivariateFn eval_;
  std::array<BivariateFn, 5> partials_{};
  std::vector<Kink> kinks_;
  Interval domain_{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
};

// Losses l with D01 L <= D01 l <= D01 U; l0 is the convenient loss. The optional
// band bounds every member pointwise (I <= l <= S) when one is known.
struct BandClass;

struct EnvelopeClass {
  Loss upper;  // U: largest d-derivative, smallest Bayes action
  Loss lower;  // L
  Loss l0;
  std::optional<std::function<double(double sigma)>> anchor;  // members satisfy l(sigma, anchor(sigma)) = 0
};

struct BandClass {
  Loss inf;  // I
  Loss sup;  // S
  Loss l0;
};

struct FiniteClass {
  std::vector<Loss> losses;
};

using Density = std::function<double(double)>;

// Losses (d - a(sigma))^2 w(sigma) / w0(sigma), one per prior density w, or a
// density band w_I <= w <= w_S.
struct PriorRatioClass {
  std::function<double(double)> a;
  Density w0;
  std::vector<Density> priors;
  std::optional<std::pair<Density, Density>> band;

  FiniteClass members() const;
  BandClass as_band() const;
};

using LossClass = std::variant<EnvelopeClass, BandClass, FiniteClass, PriorRatioClass>;

// The losses that stand for the class in diagnostics and limits.
std::vector<Loss> representatives(const LossClass& cls);

enum class Symmetry { reject, allow };

// Asymmetric squared-error envelope around l0 = 0.5 (d - sigma)^2 with weights
// k1 below and k2 above. Symmetry::allow admits k1 == k2 (degenerate class).
EnvelopeClass make_asymmetric_quadratic(double k1, double k2, Symmetry symmetric = Symmetry::reject);

// Band [k1 l0, k2 l0] containing the asymmetric quadratic class.
BandClass asymmetric_quadratic_band(double k1, double k2);

struct DamLosses {
  Loss l0;
  FiniteClass finite;  // {U, L}
  EnvelopeClass envelope;
  BandClass band;  // [0.5 l0, 1.5 l0]
};

// Flood-cost losses: l0 = 10 d + 100 exp(-d sigma) / sigma, U and L weight l0 by
// Phi(d sigma - log 10) + 0.5 and 1.5 - Phi(d sigma - log 10).
DamLosses make_dam_losses();

struct ScalarFunction {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  std::function<double(double)> d3f;
  std::string label;
  std::vector<double> kinks;  // t values where f is not smooth
};

// l(sigma, d) = f(d - sigma). f(0) = 0 and f >= 0 are checked on [-10, 10].
Loss make_translation_loss(const ScalarFunction& f);

// f(t) = exp(-t) + t - 1 and its reflection f(-t).
ScalarFunction smooth_exponential_function();
ScalarFunction reflect(const ScalarFunction& f);
ScalarFunction square_function();

// Envelope {f(d - sigma), f(sigma - d)} around 0.5 (d - sigma)^2.
EnvelopeClass make_smooth_envelope();

Loss prior_ratio_to_loss(const Density& w, const Density& w0, const std::function<double(double)>& a,
                         std::string label = "prior-ratio");

// Unique minimizer of l(sigma, .) on the bracket (golden section + parabolic).
std::optional<double> pointwise_minimizer(const Loss& loss, double sigma, Interval bracket);

// ---- audits ----------------------------------------------------------------

struct AuditBox {
  Interval sigma;
  Interval d;
  int points = 100;  // per axis
};

struct OrderingAudit {
  bool holds = true;
  double worst_violation = 0.0;  // largest positive (lhs - rhs)
  double sigma_at = 0.0;
  double d_at = 0.0;
};

OrderingAudit audit_envelope(const EnvelopeClass& cls, const AuditBox& box, double tol = 1e-12);
OrderingAudit audit_band(const BandClass& cls, const AuditBox& box, double tol = 1e-12);

struct DerivativeAudit {
  int checked = 0;
  int skipped_near_kink = 0;
  double worst_rel_error = 0.0;
  Partial worst_partial = Partial::d01;
  bool passes = true;
};

// Compares analytic partials with central differences at random points.
DerivativeAudit audit_derivatives(const Loss& loss, const AuditBox& box, int samples, unsigned long long seed,
                                  double rel_tol = 1e-4, double kink_exclusion = 1e-3);

// ---- assumption diagnostics ------------------------------------------------

enum class CheckStatus { pass, fail, flagged, unchecked };

const char* to_string(CheckStatus s);

struct LossDiagnostic {
  std::string label;
  bool minimizer_found = false;
  double minimizer = 0.0;
  double d02 = 0.0;
  double d11 = 0.0;
  bool on_kink = false;
  std::vector<double> kappa;  // per eta
};

struct AssumptionCheck {
  std::string id;  // "1a", "1c", ...
  CheckStatus status = CheckStatus::unchecked;
  std::string witness;
};

struct DiagnosticReport {
  double theta = 0.0;
  std::vector<double> eta_grid;
  std::vector<LossDiagnostic> losses;
  double inf_abs_d02 = 0.0;
  std::vector<double> kappa;  // class infimum per eta
  std::vector<AssumptionCheck> checks;

  const AssumptionCheck& check(const std::string& id) const;
};

struct DiagnosticOptions {
  Interval compact;              // K; defaults to [theta - 3, theta + 3]
  double ball_radius = 0.1;      // r in the separation condition
  int grid_points = 100;
  double singular_tol = 1e-10;
};

DiagnosticReport class_diagnostics(const LossClass& cls, double theta, std::span<const double> eta_grid,
                                   std::optional<DiagnosticOptions> opts = std::nullopt);

}  // namespace lossrobust
