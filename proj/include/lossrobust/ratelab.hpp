#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lossrobust/robustness.hpp"

namespace lossrobust {

enum class ModelFamily { normal_known_precision, exponential, custom };

const char* to_string(ModelFamily f);

using Rng = std::mt19937_64;
using Sampler = std::function<double(Rng&)>;

// Data-generating law Q, the fitted family h_sigma with its prior, and the
// limit point theta of the maximum-likelihood estimator. Q need not belong to
// the family; theta is then the KL projection supplied by the caller.
struct SamplingModel {
  ModelFamily family = ModelFamily::custom;
  std::string label;
  Sampler true_sampler;
  std::function<Posterior(std::span<const double>)> posterior;
  std::function<double(std::span<const double>)> mle;
  double theta = 0.0;
  double I_theta = 1.0;  // asymptotic variance of sqrt(n) (theta_n - theta)
};

// X ~ N(theta, 1/obs_precision), prior N(mu0, 1/lambda0); I_theta = 1/obs_precision.
SamplingModel normal_model(double theta, double mu0, double lambda0, double obs_precision);

// X ~ Exp(rate theta), prior 1/sigma, posterior Gamma(n, sum x); I_theta = theta^2.
SamplingModel exponential_model(double theta);

// Grid-posterior model for non-conjugate families.
SamplingModel custom_model(std::string label, Sampler true_sampler, LogDensity prior_log_density,
                           LogLikelihood log_likelihood, Interval support, int resolution,
                           std::function<double(std::span<const double>)> mle, double theta, double I_theta);

// Replace Q while keeping the fitted family. theta is the KL projection of the
// new Q; I_theta is taken as given or estimated by replication when absent.
SamplingModel misspecify(SamplingModel model, Sampler true_sampler, double theta,
                         std::optional<double> I_theta = std::nullopt, std::size_t n = 2000,
                         std::size_t replications = 400, std::uint64_t seed = 7);

// Replication variance of sqrt(n) (theta_n - mean theta_n).
double estimate_I_theta(const SamplingModel& model, std::size_t n, std::size_t replications, std::uint64_t seed);

// ---- experiments ------------------------------------------------------------------

enum class Measure { diameter, sup_regret, range };

const char* to_string(Measure m);
Measure measure_from_string(const std::string& name);

// The class under study, its convenient loss, and the band used by the range.
struct ClassSpec {
  LossClass cls;
  Loss l0;
  std::optional<BandClass> band;
  std::optional<Interval> bracket;  // default: posterior mean +/- 20 sd
};

struct ExperimentConfig {
  std::vector<std::size_t> n_grid{50, 100, 200, 400, 800, 1600};
  std::size_t replications = 200;
  std::uint64_t master_seed = 42;
  Measure measure = Measure::diameter;
  std::optional<ClassSpec> class_spec;
  unsigned workers = 1;

  void validate() const;
};

// Seed of replication `rep` at grid index `n_index`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t n_index, std::size_t rep);

std::vector<double> draw(const SamplingModel& model, std::size_t n, Rng& rng);

struct CurveRow {
  std::size_t n = 0;
  std::vector<double> values;       // NaN for failed replications
  std::vector<std::string> status;  // "ok" or the failure message
  std::size_t failures = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct MeasureCurve {
  Measure measure = Measure::diameter;
  std::vector<CurveRow> rows;
};

// Runs fn(n, data, posterior) for every (n, replication) cell. Cells are
// independent; results land in (n_index, replication) order whatever the
// worker count. Failures are recorded per cell; more than 5% at any n throws.
MeasureCurve run_replications(const SamplingModel& model, const ExperimentConfig& config,
                              const std::function<double(std::size_t n, std::span<const double> data,
                                                         const Posterior& post)>& fn);

double evaluate_measure(Measure measure, const ClassSpec& spec, const Posterior& post);

MeasureCurve simulate_measure_curve(const SamplingModel& model, const ExperimentConfig& config);

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double predicted_exponent = 0.0;

  bool within(double band) const;
};

// OLS of log values against log n.
RateFit fit_log_slope(std::span<const double> n, std::span<const double> values, double predicted_exponent);

// OLS of log(median |measure - limit|) against log n.
RateFit fit_log_slope(const MeasureCurve& curve, double predicted_exponent, double limit = 0.0);

// ---- posterior expansion checks -------------------------------------------------

struct TrendReport {
  std::vector<std::size_t> n;
  std::vector<double> median;
  std::vector<double> q1;
  std::vector<double> q3;
  std::vector<std::size_t> failures;
  bool numerically_zero = false;  // every median below the zero floor
  bool pass = false;
};

// Scaled residuals that sit below this are indistinguishable from quadrature noise.
inline constexpr double kTrendZeroFloor = 1e-8;

// sqrt(n) |E_n f - G (theta_n - theta)| per replication; passes when the median at
// the largest n is below half the median at the smallest n.
TrendReport verify_thm81(const SamplingModel& model, const std::function<double(double)>& f,
                         double gradient_at_theta, const ExperimentConfig& config);

// n |E_n f - 0.5 H (theta_n - theta)^2 - L_f / (2n)|, same pass rule.
TrendReport verify_thm82(const SamplingModel& model, const std::function<double(double)>& f,
                         double hessian_at_theta, const ExperimentConfig& config, double F_second_moment = 1.0);

// ---- smooth vs kinked envelope --------------------------------------------------

struct NormalModelSpec {
  double mu0 = 0.0;
  double lambda0 = 1.0;
  double obs_precision = 1.0;
  double theta = 0.0;
};

struct SmoothContrast {
  std::vector<std::size_t> n;
  std::vector<double> lambda_n;
  std::vector<double> kinked_diameter;  // median over replications
  std::vector<double> smooth_diameter;
  std::vector<double> kinked_scaled;  // sqrt(lambda_n) * diameter
  std::vector<double> smooth_scaled;
  RateFit kinked_fit;
  RateFit smooth_fit;
  double kinked_scaled_spread = 0.0;  // (max - min) / mean of kinked_scaled
  double smooth_ratio = 0.0;          // smooth_scaled at last n / at first n
};

SmoothContrast smooth_vs_nonsmooth_demo(const ExperimentConfig& config, const NormalModelSpec& spec, double k1,
                                        double k2);

// ---- limit law of the Bayes action set diameter ---------------------------------

struct LawCheck {
  std::size_t n = 0;
  std::size_t replications = 0;
  double limit = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double z_score = 0.0;
  bool pass = false;
};

// Mean of sqrt(n) (diameter_n - limit_diameter) over replications, compared with 0
// at 3 standard errors.
LawCheck diameter_law_check(const SamplingModel& model, const LossClass& cls, Interval bracket, std::size_t n,
                            std::size_t replications, std::uint64_t seed, unsigned workers = 1);

}  // namespace lossrobust
