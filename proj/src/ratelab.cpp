#include "lossrobust/ratelab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

constexpr double kMaxFailureFraction = 0.05;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double sample_mean(std::span<const double> data) {
  if (data.empty()) throw DomainError("empty sample");
  return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
}

void check_vanishes(const std::function<double(double)>& f, double theta, const char* what) {
  if (std::abs(f(theta)) > 1e-10) {
    std::ostringstream msg;
    msg << what << ": test function must vanish at theta (f(theta) = " << f(theta) << ")";
    throw PreconditionError(msg.str());
  }
}

TrendReport trend_from_curve(const MeasureCurve& curve) {
  TrendReport rep;
  for (const auto& row : curve.rows) {
    rep.n.push_back(row.n);
    rep.median.push_back(row.median);
    rep.q1.push_back(row.q1);
    rep.q3.push_back(row.q3);
    rep.failures.push_back(row.failures);
  }
  if (rep.median.empty()) return rep;
  rep.numerically_zero = std::all_of(rep.median.begin(), rep.median.end(),
                                     [](double m) { return std::abs(m) <= kTrendZeroFloor; });
  rep.pass = rep.numerically_zero || rep.median.back() < 0.5 * rep.median.front();
  return rep;
}

}  // namespace

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::normal_known_precision: return "normal-known-precision";
    case ModelFamily::exponential: return "exponential";
    case ModelFamily::custom: return "custom";
  }
  return "?";
}

SamplingModel normal_model(double theta, double mu0, double lambda0, double obs_precision) {
  if (!(lambda0 > 0.0) || !(obs_precision > 0.0)) throw DomainError("normal model: precisions must be positive");
  SamplingModel m;
  m.family = ModelFamily::normal_known_precision;
  m.label = "normal-known-precision";
  const double sd = 1.0 / std::sqrt(obs_precision);
  m.true_sampler = [theta, sd](Rng& rng) { return std::normal_distribution<double>(theta, sd)(rng); };
  m.posterior = [mu0, lambda0, obs_precision](std::span<const double> data) -> Posterior {
    return normal_update(mu0, lambda0, obs_precision, data);
  };
  m.mle = sample_mean;
  m.theta = theta;
  m.I_theta = 1.0 / obs_precision;
  return m;
}

SamplingModel exponential_model(double theta) {
  if (!(theta > 0.0)) throw DomainError("exponential model: rate must be positive");
  SamplingModel m;
  m.family = ModelFamily::exponential;
  m.label = "exponential";
  m.true_sampler = [theta](Rng& rng) { return std::exponential_distribution<double>(theta)(rng); };
  m.posterior = [](std::span<const double> data) -> Posterior { return gamma_update(data); };
  m.mle = [](std::span<const double> data) { return 1.0 / sample_mean(data); };
  m.theta = theta;
  m.I_theta = theta * theta;
  return m;
}

SamplingModel custom_model(std::string label, Sampler true_sampler, LogDensity prior_log_density,
                           LogLikelihood log_likelihood, Interval support, int resolution,
                           std::function<double(std::span<const double>)> mle, double theta, double I_theta) {
  SamplingModel m;
  m.family = ModelFamily::custom;
  m.label = std::move(label);
  m.true_sampler = std::move(true_sampler);
  m.posterior = [prior = std::move(prior_log_density), lik = std::move(log_likelihood), support,
                 resolution](std::span<const double> data) -> Posterior {
    return grid_posterior(prior, lik, data, support, resolution);
  };
  m.mle = std::move(mle);
  m.theta = theta;
  m.I_theta = I_theta;
  return m;
}

SamplingModel misspecify(SamplingModel model, Sampler true_sampler, double theta, std::optional<double> I_theta,
                         std::size_t n, std::size_t replications, std::uint64_t seed) {
  model.true_sampler = std::move(true_sampler);
  model.theta = theta;
  model.label += " (misspecified)";
  model.I_theta = I_theta ? *I_theta : estimate_I_theta(model, n, replications, seed);
  return model;
}

double estimate_I_theta(const SamplingModel& model, std::size_t n, std::size_t replications, std::uint64_t seed) {
  if (replications < 2 || n == 0) throw DomainError("estimate_I_theta: need n >= 1 and at least 2 replications");
  std::vector<double> est(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    Rng rng(replication_seed(seed, 0, r));
    const std::vector<double> data = draw(model, n, rng);
    est[r] = model.mle(data);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(replications);
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  return static_cast<double>(n) * ss / static_cast<double>(replications - 1);
}

const char* to_string(Measure m) {
  switch (m) {
    case Measure::diameter: return "diameter";
    case Measure::sup_regret: return "sup_regret";
    case Measure::range: return "range";
  }
  return "?";
}

Measure measure_from_string(const std::string& name) {
  if (name == "diameter") return Measure::diameter;
  if (name == "sup_regret") return Measure::sup_regret;
  if (name == "range") return Measure::range;
  throw DomainError("unknown measure '" + name + "' (expected diameter, sup_regret or range)");
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw DomainError("experiment: n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] == 0) throw DomainError("experiment: sample sizes must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw DomainError("experiment: n_grid must be strictly increasing");
  }
  if (replications < 1) throw DomainError("experiment: replications must be at least 1");
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t n_index, std::size_t rep) {
  return splitmix(splitmix(splitmix(master) ^ static_cast<std::uint64_t>(n_index)) ^ static_cast<std::uint64_t>(rep));
}

std::vector<double> draw(const SamplingModel& model, std::size_t n, Rng& rng) {
  std::vector<double> data(n);
  for (double& x : data) x = model.true_sampler(rng);
  return data;
}

MeasureCurve run_replications(const SamplingModel& model, const ExperimentConfig& config,
                              const std::function<double(std::size_t, std::span<const double>,
                                                         const Posterior&)>& fn) {
  config.validate();
  const std::size_t reps = config.replications;
  const std::size_t cells = config.n_grid.size() * reps;
  std::vector<double> values(cells, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> status(cells);

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      const std::size_t n_index = cell / reps, rep = cell % reps;
      const std::size_t n = config.n_grid[n_index];
      try {
        Rng rng(replication_seed(config.master_seed, n_index, rep));
        const std::vector<double> data = draw(model, n, rng);
        const Posterior post = model.posterior(data);
        const double v = fn(n, data, post);
        if (!std::isfinite(v)) throw NumericalError("measure is not finite");
        values[cell] = v;
        status[cell] = "ok";
      } catch (const Error& e) {
        status[cell] = e.what();
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = cells;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(cells)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  MeasureCurve curve;
  curve.measure = config.measure;
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    CurveRow row;
    row.n = config.n_grid[i];
    row.values.assign(values.begin() + static_cast<std::ptrdiff_t>(i * reps),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * reps));
    row.status.assign(status.begin() + static_cast<std::ptrdiff_t>(i * reps),
                      status.begin() + static_cast<std::ptrdiff_t>((i + 1) * reps));
    std::vector<double> ok;
    for (std::size_t r = 0; r < reps; ++r) {
      if (row.status[r] == "ok") ok.push_back(row.values[r]);
    }
    row.failures = reps - ok.size();
    if (static_cast<double>(row.failures) > kMaxFailureFraction * static_cast<double>(reps)) {
      std::ostringstream msg;
      msg << row.failures << " of " << reps << " replications failed at n = " << row.n;
      for (const auto& s : row.status) {
        if (s != "ok") {
          msg << " (first failure: " << s << ")";
          break;
        }
      }
      throw ExperimentError(msg.str());
    }
    row.median = quantile(ok, 0.5);
    row.q1 = quantile(ok, 0.25);
    row.q3 = quantile(ok, 0.75);
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

double evaluate_measure(Measure measure, const ClassSpec& spec, const Posterior& post) {
  switch (measure) {
    case Measure::diameter:
      return action_set(spec.cls, post, spec.bracket).diameter();
    case Measure::sup_regret: {
      const double d0 = bayes_action(spec.l0, post, spec.bracket).action;
      return sup_regret(spec.cls, post, d0, spec.bracket);
    }
    case Measure::range: {
      const double d0 = bayes_action(spec.l0, post, spec.bracket).action;
      if (spec.band) return range_band(*spec.band, post, d0);
      if (const auto* f = std::get_if<FiniteClass>(&spec.cls)) return range_finite(*f, post, d0);
      throw DomainError("range needs a band or a finite class");
    }
  }
  throw DomainError("unknown measure");
}

MeasureCurve simulate_measure_curve(const SamplingModel& model, const ExperimentConfig& config) {
  if (!config.class_spec) throw DomainError("simulate_measure_curve: the experiment has no class");
  const ClassSpec& spec = *config.class_spec;
  return run_replications(model, config, [&](std::size_t, std::span<const double>, const Posterior& post) {
    return evaluate_measure(config.measure, spec, post);
  });
}

bool RateFit::within(double band) const { return std::abs(slope - predicted_exponent) <= band; }

RateFit fit_log_slope(std::span<const double> n, std::span<const double> values, double predicted_exponent) {
  if (n.size() != values.size()) throw DomainError("fit_log_slope: size mismatch");
  if (n.size() < 4) throw DegenerateError("fit_log_slope: need at least 4 grid points");
  const std::size_t m = n.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "fit_log_slope: nonpositive value " << values[i] << " at n = " << n[i];
      throw DegenerateError(msg.str());
    }
    x[i] = std::log(n[i]);
    y[i] = std::log(values[i]);
  }
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
    syy += (y[i] - ybar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) throw DegenerateError("fit_log_slope: all sample sizes equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.slope_stderr = std::sqrt(ss_res / static_cast<double>(m - 2) / sxx);
  fit.predicted_exponent = predicted_exponent;
  return fit;
}

RateFit fit_log_slope(const MeasureCurve& curve, double predicted_exponent, double limit) {
  std::vector<double> n, med;
  for (const auto& row : curve.rows) {
    std::vector<double> dev;
    for (std::size_t r = 0; r < row.values.size(); ++r) {
      if (row.status[r] == "ok") dev.push_back(std::abs(row.values[r] - limit));
    }
    n.push_back(static_cast<double>(row.n));
    med.push_back(quantile(dev, 0.5));
  }
  return fit_log_slope(n, med, predicted_exponent);
}

TrendReport verify_thm81(const SamplingModel& model, const std::function<double(double)>& f,
                         double gradient_at_theta, const ExperimentConfig& config) {
  check_vanishes(f, model.theta, "verify_thm81");
  const double theta = model.theta;
  const MeasureCurve curve =
      run_replications(model, config, [&](std::size_t n, std::span<const double> data, const Posterior& post) {
        const double theta_n = model.mle(data);
        const double integral = expectation(post, f);
        return std::sqrt(static_cast<double>(n)) * std::abs(integral - gradient_at_theta * (theta_n - theta));
      });
  return trend_from_curve(curve);
}

TrendReport verify_thm82(const SamplingModel& model, const std::function<double(double)>& f,
                         double hessian_at_theta, const ExperimentConfig& config, double F_second_moment) {
  const double theta = model.theta;
  check_vanishes(f, theta, "verify_thm82");
  const double h = 1e-6 * std::max(1.0, std::abs(theta));
  const double grad = (f(theta + h) - f(theta - h)) / (2.0 * h);
  if (std::abs(grad) > 1e-10) {
    std::ostringstream msg;
    msg << "verify_thm82: gradient of the test function at theta must vanish (got " << grad << ")";
    throw PreconditionError(msg.str());
  }
  const double lf = L_f(hessian_at_theta, model.I_theta, F_second_moment);
  const MeasureCurve curve =
      run_replications(model, config, [&](std::size_t n, std::span<const double> data, const Posterior& post) {
        const double nn = static_cast<double>(n);
        const double dev = model.mle(data) - theta;
        const double integral = expectation(post, f);
        return nn * std::abs(integral - 0.5 * hessian_at_theta * dev * dev - 0.5 * lf / nn);
      });
  return trend_from_curve(curve);
}

SmoothContrast smooth_vs_nonsmooth_demo(const ExperimentConfig& config, const NormalModelSpec& spec, double k1,
                                        double k2) {
  const SamplingModel model = normal_model(spec.theta, spec.mu0, spec.lambda0, spec.obs_precision);
  const EnvelopeClass kinked = make_asymmetric_quadratic(k1, k2, Symmetry::allow);
  const EnvelopeClass smooth = make_smooth_envelope();
  auto diam = [](const LossClass& cls) {
    return [cls](std::size_t, std::span<const double>, const Posterior& post) {
      return action_set(cls, post).diameter();
    };
  };
  const MeasureCurve kc = run_replications(model, config, diam(kinked));
  const MeasureCurve sc = run_replications(model, config, diam(smooth));

  SmoothContrast out;
  for (std::size_t i = 0; i < kc.rows.size(); ++i) {
    const double lambda_n = spec.lambda0 + static_cast<double>(kc.rows[i].n) * spec.obs_precision;
    out.n.push_back(kc.rows[i].n);
    out.lambda_n.push_back(lambda_n);
    out.kinked_diameter.push_back(kc.rows[i].median);
    out.smooth_diameter.push_back(sc.rows[i].median);
    out.kinked_scaled.push_back(std::sqrt(lambda_n) * kc.rows[i].median);
    out.smooth_scaled.push_back(std::sqrt(lambda_n) * sc.rows[i].median);
  }
  std::vector<double> nd(out.n.begin(), out.n.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (k1 < k2 && nd.size() >= 4) {
    out.kinked_fit = fit_log_slope(nd, out.kinked_diameter, -0.5);
  } else {
    out.kinked_fit = {nan, nan, nan, nan, -0.5};
  }
  out.smooth_fit = nd.size() >= 4 ? fit_log_slope(nd, out.smooth_diameter, -1.0) : RateFit{nan, nan, nan, nan, -1.0};
  if (!out.kinked_scaled.empty()) {
    const auto [lo, hi] = std::minmax_element(out.kinked_scaled.begin(), out.kinked_scaled.end());
    const double mean = std::accumulate(out.kinked_scaled.begin(), out.kinked_scaled.end(), 0.0) /
                        static_cast<double>(out.kinked_scaled.size());
    out.kinked_scaled_spread = mean > 0.0 ? (*hi - *lo) / mean : 0.0;
    out.smooth_ratio = out.smooth_scaled.back() / out.smooth_scaled.front();
  }
  return out;
}

LawCheck diameter_law_check(const SamplingModel& model, const LossClass& cls, Interval bracket, std::size_t n,
                            std::size_t replications, std::uint64_t seed, unsigned workers) {
  LawCheck out;
  out.n = n;
  out.limit = limit_diameter(cls, model.theta, bracket);
  ExperimentConfig cfg;
  cfg.n_grid = {n};
  cfg.replications = replications;
  cfg.master_seed = seed;
  cfg.workers = workers;
  const double root_n = std::sqrt(static_cast<double>(n));
  const MeasureCurve curve =
      run_replications(model, cfg, [&](std::size_t, std::span<const double>, const Posterior& post) {
        return root_n * (action_set(cls, post, bracket).diameter() - out.limit);
      });
  std::vector<double> ok;
  const auto& row = curve.rows.front();
  for (std::size_t r = 0; r < row.values.size(); ++r) {
    if (row.status[r] == "ok") ok.push_back(row.values[r]);
  }
  out.replications = ok.size();
  if (ok.size() < 2) throw ExperimentError("diameter_law_check: fewer than two successful replications");
  const double m = static_cast<double>(ok.size());
  out.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : ok) ss += (v - out.mean) * (v - out.mean);
  out.stderr_mean = std::sqrt(ss / (m - 1.0) / m);
  out.z_score = out.stderr_mean > 0.0 ? out.mean / out.stderr_mean : 0.0;
  out.pass = std::abs(out.z_score) <= 3.0;
  return out;
}

}  // namespace lossrobust
