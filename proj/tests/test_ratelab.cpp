#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "lossrobust/closed_form.hpp"
#include "lossrobust/errors.hpp"
#include "lossrobust/ratelab.hpp"
#include "oracles.hpp"

using namespace lossrobust;

namespace {

ExperimentConfig small_config(std::size_t reps = 200) {
  ExperimentConfig cfg;
  cfg.replications = reps;
  return cfg;
}

ClassSpec aq_spec(double k1, double k2) {
  const auto cls = make_asymmetric_quadratic(k1, k2);
  return {cls, cls.l0, asymmetric_quadratic_band(k1, k2), std::nullopt};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("mle is centred at theta under the true family") {
  for (const SamplingModel& model : {normal_model(0.7, 0.0, 1.0, 2.0), exponential_model(0.5)}) {
    std::vector<double> est;
    for (std::size_t r = 0; r < 200; ++r) {
      Rng rng(replication_seed(17, 0, r));
      est.push_back(model.mle(draw(model, 10000, rng)));
    }
    const double m = mean_of(est);
    double ss = 0.0;
    for (double e : est) ss += (e - m) * (e - m);
    const double se = std::sqrt(ss / (est.size() - 1) / est.size());
    CAPTURE(model.label);
    CHECK(std::abs(m - model.theta) <= 3.0 * se);
  }
}

TEST_CASE("model I_theta") {
  CHECK(normal_model(0.0, 0.0, 1.0, 4.0).I_theta == 0.25);
  CHECK(exponential_model(0.5).I_theta == 0.25);
  CHECK_THROWS_AS(normal_model(0.0, 0.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(exponential_model(-1.0), DomainError);
}

TEST_CASE("misspecified model: lognormal data, exponential fit") {
  const auto lognormal = [](Rng& rng) { return std::lognormal_distribution<double>(0.0, 0.5)(rng); };
  const double mean_x = std::exp(0.125);
  const double var_x = (std::exp(0.25) - 1.0) * std::exp(0.25);
  const double theta = 1.0 / mean_x;
  const SamplingModel m = misspecify(exponential_model(1.0), lognormal, theta);
  CHECK(m.theta == theta);
  // Delta method for 1 / mean: I_theta = theta^4 Var(X).
  CHECK(m.I_theta == doctest::Approx(std::pow(theta, 4) * var_x).epsilon(0.15));
  const SamplingModel given = misspecify(exponential_model(1.0), lognormal, theta, 0.3);
  CHECK(given.I_theta == 0.3);
}

TEST_CASE("closed-form curves have no Monte Carlo spread") {
  const SamplingModel model = normal_model(0.2, 0.0, 1.0, 1.0);
  ExperimentConfig cfg = small_config(20);
  cfg.n_grid = {10, 100, 1000};
  cfg.class_spec = aq_spec(1.0, 2.0);

  cfg.measure = Measure::range;
  const MeasureCurve range = simulate_measure_curve(model, cfg);
  for (const auto& row : range.rows) {
    const double expected = 0.5 * (2.0 - 1.0) / (1.0 + static_cast<double>(row.n));
    for (double v : row.values) CHECK(v == doctest::Approx(expected).epsilon(1e-9));
  }

  cfg.measure = Measure::diameter;
  const MeasureCurve diam = simulate_measure_curve(model, cfg);
  for (const auto& row : diam.rows) {
    const double expected = (oracle::r_lower - oracle::r_upper) / std::sqrt(1.0 + static_cast<double>(row.n));
    for (double v : row.values) CHECK(v == doctest::Approx(expected).epsilon(1e-7));
    CHECK(row.failures == 0);
  }
}

TEST_CASE("dam diameter under the exponential model approaches its limit") {
  const auto dam = make_dam_losses();
  const SamplingModel model = exponential_model(0.5);
  ExperimentConfig cfg = small_config(100);
  cfg.n_grid = {50, 100, 200, 400};
  cfg.class_spec = ClassSpec{dam.finite, dam.l0, dam.band, Interval{0.5, 20.0}};
  const MeasureCurve curve = simulate_measure_curve(model, cfg);
  const double limit = limit_diameter(dam.finite, 0.5, {0.5, 20.0});
  CHECK(std::abs(curve.rows.back().median - limit) < 0.3);
  const double iqr_first = curve.rows.front().q3 - curve.rows.front().q1;
  const double iqr_last = curve.rows.back().q3 - curve.rows.back().q1;
  // sqrt(50 / 400) = 0.354
  CHECK(iqr_last / iqr_first > 0.2);
  CHECK(iqr_last / iqr_first < 0.55);
}

TEST_CASE("log-slope fits") {
  const std::vector<double> n{1e2, 1e3, 1e4, 1e5};
  std::vector<double> a, b;
  for (double x : n) {
    a.push_back(3.0 / std::sqrt(x));
    b.push_back(7.0 / x);
  }
  const RateFit fa = fit_log_slope(n, a, -0.5);
  CHECK(fa.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fa.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fa.within(1e-9));
  CHECK(fit_log_slope(n, b, -1.0).slope == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<double> with_zero{1.0, 0.5, 0.0, 0.1};
  CHECK_THROWS_AS(fit_log_slope(n, with_zero, -1.0), DegenerateError);
  const std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(fit_log_slope(std::span(n).first(3), three, -1.0), DegenerateError);

  const std::vector<double> noisy{1.0, 0.4, 0.11, 0.035};
  const RateFit fn = fit_log_slope(n, noisy, -0.5);
  CHECK(fn.r_squared >= 0.0);
  CHECK(fn.r_squared <= 1.0);
  CHECK(fn.slope_stderr >= 0.0);
}

TEST_CASE("asymmetric quadratic diameter curve has slope -1/2") {
  const SamplingModel model = normal_model(0.0, 0.0, 1e-3, 1.0);
  ExperimentConfig cfg = small_config(3);
  cfg.class_spec = aq_spec(1.0, 2.0);
  const RateFit fit = fit_log_slope(simulate_measure_curve(model, cfg), -0.5);
  CHECK(std::abs(fit.slope + 0.5) <= 1e-3);
}

TEST_CASE("posterior expansion, first order") {
  ExperimentConfig cfg = small_config();
  const SamplingModel normal = normal_model(0.3, 0.0, 1.0, 1.0);
  const SamplingModel expo = exponential_model(0.5);
  SUBCASE("normal, f = s - theta") {
    const auto rep = verify_thm81(normal, [](double s) { return s - 0.3; }, 1.0, cfg);
    CHECK(rep.pass);
    CHECK_FALSE(rep.numerically_zero);
  }
  SUBCASE("normal, f = 0") {
    const auto rep = verify_thm81(normal, [](double) { return 0.0; }, 0.0, cfg);
    CHECK(rep.numerically_zero);
    CHECK(rep.pass);
  }
  SUBCASE("normal, f = (s - theta)^2") {
    const auto rep = verify_thm81(normal, [](double s) { return (s - 0.3) * (s - 0.3); }, 0.0, cfg);
    CHECK(rep.pass);
  }
  SUBCASE("exponential, f = log(s / theta)") {
    const auto rep = verify_thm81(expo, [](double s) { return std::log(s / 0.5); }, 2.0, cfg);
    CHECK(rep.pass);
    CHECK_FALSE(rep.numerically_zero);
  }
  SUBCASE("exponential, f = s - theta is exact") {
    const auto rep = verify_thm81(expo, [](double s) { return s - 0.5; }, 1.0, cfg);
    CHECK(rep.numerically_zero);
    CHECK(rep.pass);
  }
  SUBCASE("f must vanish at theta") {
    CHECK_THROWS_AS(verify_thm81(normal, [](double s) { return s; }, 1.0, cfg), PreconditionError);
  }
}

TEST_CASE("posterior expansion, second order") {
  ExperimentConfig cfg = small_config();
  const SamplingModel normal = normal_model(0.3, 0.0, 1.0, 1.0);
  const SamplingModel expo = exponential_model(0.5);
  SUBCASE("normal, f = (s - theta)^2") {
    const auto rep = verify_thm82(normal, [](double s) { return (s - 0.3) * (s - 0.3); }, 2.0, cfg);
    CHECK(rep.pass);
  }
  SUBCASE("normal, f = (s - theta)^3") {
    const auto rep = verify_thm82(normal, [](double s) { return std::pow(s - 0.3, 3); }, 0.0, cfg);
    CHECK(rep.pass);
  }
  SUBCASE("f = 0") {
    const auto rep = verify_thm82(normal, [](double) { return 0.0; }, 0.0, cfg);
    CHECK(rep.numerically_zero);
    CHECK(rep.pass);
  }
  SUBCASE("exponential, f = (s - theta)^2") {
    const auto rep = verify_thm82(expo, [](double s) { return (s - 0.5) * (s - 0.5); }, 2.0, cfg);
    CHECK(rep.pass);
  }
  SUBCASE("exponential, f = (s - theta)^3") {
    const auto rep = verify_thm82(expo, [](double s) { return std::pow(s - 0.5, 3); }, 0.0, cfg);
    CHECK(rep.pass);
  }
  SUBCASE("gradient must vanish at theta") {
    CHECK_THROWS_AS(verify_thm82(normal, [](double s) { return s - 0.3; }, 0.0, cfg), PreconditionError);
  }
}

TEST_CASE("smooth versus kinked envelope") {
  ExperimentConfig cfg = small_config(5);
  cfg.n_grid = {100, 400, 1600, 10000};
  const NormalModelSpec spec{0.0, 1.0, 1.0, 0.2};
  const SmoothContrast c = smooth_vs_nonsmooth_demo(cfg, spec, 1.0, 2.0);
  CHECK(c.kinked_scaled_spread <= 1e-6);
  CHECK(c.kinked_scaled.front() == doctest::Approx(oracle::r_lower - oracle::r_upper).epsilon(1e-6));
  CHECK(c.smooth_ratio < 0.25);
  CHECK(std::abs(c.kinked_fit.slope + 0.5) < 0.01);
  CHECK(std::abs(c.smooth_fit.slope + 1.0) < 0.01);

  const SmoothContrast sym = smooth_vs_nonsmooth_demo(cfg, spec, 1.0, 1.0);
  for (double d : sym.kinked_diameter) CHECK(std::abs(d) < 1e-10);
}

TEST_CASE("replication seeds and determinism across workers") {
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t r = 0; r < 100; ++r) seeds.insert(replication_seed(42, i, r));
  }
  CHECK(seeds.size() == 1000);

  const auto dam = make_dam_losses();
  ExperimentConfig cfg = small_config(12);
  cfg.n_grid = {50, 100, 200, 400};
  cfg.measure = Measure::sup_regret;
  cfg.class_spec = ClassSpec{dam.envelope, dam.l0, dam.band, Interval{0.5, 20.0}};
  const SamplingModel model = exponential_model(0.5);
  const MeasureCurve one = simulate_measure_curve(model, cfg);
  cfg.workers = 3;
  const MeasureCurve three = simulate_measure_curve(model, cfg);
  REQUIRE(one.rows.size() == three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].values == three.rows[i].values);
    CHECK(one.rows[i].median == three.rows[i].median);
  }
  cfg.master_seed = 43;
  CHECK(simulate_measure_curve(model, cfg).rows[0].values != one.rows[0].values);
}

TEST_CASE("replication failures") {
  const SamplingModel model = normal_model(0.0, 0.0, 1.0, 1.0);
  ExperimentConfig cfg = small_config(100);
  cfg.n_grid = {10, 20};
  int calls = 0;
  const auto sometimes = [&calls](std::size_t, std::span<const double>, const Posterior&) -> double {
    if (++calls % 50 == 0) throw NumericalError("synthetic");
    return 1.0;
  };
  const MeasureCurve curve = run_replications(model, cfg, sometimes);
  CHECK(curve.rows[0].failures == 2);
  CHECK(curve.rows[0].median == 1.0);

  const auto often = [](std::size_t, std::span<const double> data, const Posterior&) -> double {
    if (data[0] > 1.0) throw NumericalError("synthetic");
    return 1.0;
  };
  CHECK_THROWS_AS(run_replications(model, cfg, often), ExperimentError);
}

TEST_CASE("config validation and measure names") {
  ExperimentConfig cfg;
  cfg.n_grid = {100, 50};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.n_grid = {50, 100};
  cfg.replications = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK(measure_from_string("sup_regret") == Measure::sup_regret);
  CHECK(std::string(to_string(Measure::range)) == "range");
  CHECK_THROWS_AS(measure_from_string("median"), DomainError);
}

TEST_CASE("diameter law at n = 10^4") {
  const auto dam = make_dam_losses();
  const LawCheck law = diameter_law_check(exponential_model(0.5), dam.finite, {0.5, 20.0}, 10000, 500, 42);
  CHECK(law.replications == 500);
  CHECK(law.limit == doctest::Approx(oracle::dam_limit_diameter).epsilon(1e-7));
  CHECK(law.pass);
  CHECK(std::abs(law.z_score) <= 3.0);
}
