#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lossrobust/errors.hpp"
#include "lossrobust/posteriors.hpp"
#include "oracles.hpp"

using namespace lossrobust;

namespace {

double exp_loglik(double s, std::span<const double> data) {
  double sum = 0.0;
  for (double x : data) sum += x;
  return static_cast<double>(data.size()) * std::log(s) - s * sum;
}

// 100 observations summing to 193.6.
std::vector<double> dam_data() { return std::vector<double>(100, 1.936); }

}  // namespace

TEST_CASE("normal update") {
  const std::vector<double> data{1.0, 2.0, 3.0};
  auto p = normal_update(0.0, 1.0, 1.0, data);
  CHECK(p.mu == doctest::Approx(1.5));
  CHECK(p.precision == doctest::Approx(4.0));

  p = normal_update(5.0, 2.0, 1.0, {});
  CHECK(p.mu == 5.0);
  CHECK(p.precision == 2.0);

  const std::vector<double> one{1.0};
  p = normal_update(0.0, 1.0, 4.0, one);
  CHECK(p.mu == doctest::Approx(0.8));
  CHECK(p.precision == doctest::Approx(5.0));

  CHECK_THROWS_AS(normal_update(0.0, 0.0, 1.0, data), DomainError);
  CHECK_THROWS_AS(normal_update(0.0, 1.0, -1.0, data), DomainError);
}

TEST_CASE("gamma update") {
  const auto p = gamma_update(dam_data());
  CHECK(p.shape == 100.0);
  CHECK(p.rate == doctest::Approx(193.6).epsilon(1e-14));

  const std::vector<double> two{2.0};
  const auto q = gamma_update(two);
  CHECK(q.shape == 1.0);
  CHECK(q.rate == 2.0);
  CHECK(q.mean() == 0.5);

  const std::vector<double> ones{1.0, 1.0, 1.0, 1.0};
  const auto r = gamma_update(ones);
  CHECK(r.mean() == 1.0);
  CHECK(r.variance() == 0.25);

  CHECK_THROWS_AS(gamma_update({}), DomainError);
  const std::vector<double> bad{1.0, -2.0};
  CHECK_THROWS_AS(gamma_update(bad), DomainError);
}

TEST_CASE("expectation examples") {
  const Posterior g = GammaPosterior{oracle::dam_shape, oracle::dam_rate};
  CHECK(expectation(g, [](double s) { return s; }) == doctest::Approx(100.0 / 193.6).epsilon(1e-9));

  const Posterior n = NormalPosterior{1.5, 4.0};
  CHECK(expectation(n, [](double s) { return (s - 1.5) * (s - 1.5); }) == doctest::Approx(0.25).epsilon(1e-9));

  const double v = expectation(g, [](double s) { return std::exp(-4.5 * s) / s; });
  CHECK(v == doctest::Approx(oracle::dam_inv_exp_moment).epsilon(1e-9));
}

TEST_CASE("normalization of every posterior kind") {
  const std::vector<Posterior> posts{
      NormalPosterior{0.3, 1e4}, NormalPosterior{-2.0, 0.01}, GammaPosterior{1.0, 2.0}, GammaPosterior{1e4, 2e4},
      GammaPosterior{0.5, 3.0},
      grid_posterior([](double) { return 0.0; }, exp_loglik, dam_data(), {0.05, 3.0}, 400)};
  for (const auto& p : posts) {
    CHECK(expectation(p, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("point-mass fallback below sd 1e-13") {
  const Posterior p = NormalPosterior{2.0, 1e30};
  CHECK(expectation(p, [](double s) { return s * s; }) == 4.0);
}

TEST_CASE("grid posterior agrees with conjugate forms") {
  SUBCASE("exponential likelihood with 1/sigma prior") {
    const auto data = dam_data();
    const Posterior grid = grid_posterior([](double s) { return -std::log(s); }, exp_loglik, data, {0.05, 2.0}, 2000);
    const Posterior conj = gamma_update(data);
    for (int k = 0; k <= 4; ++k) {
      const auto poly = [k](double s) { return std::pow(s, k); };
      CHECK(expectation(grid, poly) == doctest::Approx(expectation(conj, poly)).epsilon(1e-6));
    }
  }
  SUBCASE("normal likelihood with normal prior") {
    const std::vector<double> data{0.3, -0.1, 0.7, 1.2, 0.4};
    const auto prior = [](double s) { return -0.5 * 2.0 * (s - 1.0) * (s - 1.0); };
    const auto lik = [](double s, std::span<const double> xs) {
      double out = 0.0;
      for (double x : xs) out += -0.5 * 3.0 * (x - s) * (x - s);
      return out;
    };
    const Posterior grid = grid_posterior(prior, lik, data, {-5.0, 5.0}, 2000);
    const Posterior conj = normal_update(1.0, 2.0, 3.0, data);
    for (int k = 0; k <= 4; ++k) {
      const auto poly = [k](double s) { return std::pow(s, k); };
      CHECK(expectation(grid, poly) == doctest::Approx(expectation(conj, poly)).epsilon(1e-6));
    }
  }
  SUBCASE("flat prior and likelihood") {
    const Posterior grid = grid_posterior([](double) { return 0.0; },
                                          [](double, std::span<const double>) { return 0.0; }, {}, {2.0, 6.0}, 64);
    CHECK(expectation(grid, [](double s) { return s; }) == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("grid posterior rejects zero likelihood") {
  const auto dead = [](double, std::span<const double>) { return -INFINITY; };
  CHECK_THROWS_AS(grid_posterior([](double) { return 0.0; }, dead, {}, {0.0, 1.0}, 32), DegenerateError);
  CHECK_THROWS_AS(grid_posterior([](double) { return 0.0; }, exp_loglik, {}, {0.0, 1.0}, 8), DomainError);
}

TEST_CASE("grid weights normalize with large n") {
  std::vector<double> data(10000, 2.0);
  const auto grid = grid_posterior([](double s) { return -std::log(s); }, exp_loglik, data, {0.3, 0.7}, 4000);
  double sum = 0.0;
  for (double w : grid.weights()) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(grid.mean() == doctest::Approx(0.5).epsilon(1e-4));
}

// Mass outside [theta - alpha, theta + alpha] averaged over seeds; a single
// path is random and need not shrink at every step.
TEST_CASE("posterior concentration decreases along a doubling grid") {
  const double theta = 0.5, alpha = 0.2;
  const std::vector<std::size_t> grid{25, 50, 100, 200, 400, 800};
  const int seeds = 40;
  std::vector<double> mean(grid.size(), 0.0);
  for (int seed = 1; seed <= seeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp_dist(theta);
    std::vector<double> data;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      while (data.size() < grid[i]) data.push_back(exp_dist(rng));
      mean[i] += mass_outside(gamma_update(data), theta, alpha) / seeds;
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CAPTURE(grid[i]);
    CHECK(mean[i] < mean[i - 1]);
  }
}
