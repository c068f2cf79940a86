#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "lossrobust/numerics.hpp"

namespace lossrobust {

// N(mu, 1/precision) posterior for a location parameter.
struct NormalPosterior {
  double mu = 0.0;
  double precision = 1.0;

  double mean() const { return mu; }
  double sd() const;
  double mode() const { return mu; }
  double density(double sigma) const;
  NormalPosterior shifted(double c) const { return {mu + c, precision}; }
};

// Gamma(shape, rate) posterior: the exponential model under the 1/sigma reference prior.
struct GammaPosterior {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
  double sd() const;
  double mode() const;
  double density(double sigma) const;
  double quantile(double p) const;
};

// Discrete approximation on an increasing node grid. Masses carry the Simpson
// weights of the construction grid, so sums over nodes are quadratures.
class GridPosterior {
 public:
  GridPosterior(std::vector<double> nodes, std::vector<double> log_weights);

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> log_weights() const { return log_weights_; }
  std::span<const double> weights() const { return weights_; }

  double mean() const;
  double sd() const;
  double mode() const;
  GridPosterior shifted(double c) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> log_weights_;  // normalized: logsumexp == 0
  std::vector<double> weights_;
};

using Posterior = std::variant<NormalPosterior, GammaPosterior, GridPosterior>;

NormalPosterior normal_update(double mu0, double lambda0, double obs_precision, std::span<const double> data);

GammaPosterior gamma_update(std::span<const double> data);

// Gamma posterior from sufficient statistics (n, sum of observations).
GammaPosterior gamma_from_summary(double n, double sum);

using LogDensity = std::function<double(double)>;
using LogLikelihood = std::function<double(double sigma, std::span<const double> data)>;

GridPosterior grid_posterior(const LogDensity& prior_log_density, const LogLikelihood& log_likelihood,
                             std::span<const double> data, Interval support, int resolution);

double posterior_mean(const Posterior& post);
double posterior_sd(const Posterior& post);
double posterior_mode(const Posterior& post);

// Range of sigma over which expectations integrate.
Interval integration_window(const Posterior& post);

// Integral of g against the posterior. Breakpoints mark points where g is not
// smooth; the quadrature splits there. Falls back to g(mode) when the
// posterior standard deviation is below 1e-13.
double expectation(const Posterior& post, const std::function<double(double)>& g,
                   std::span<const double> breakpoints = {});

// Posterior mass outside [center - alpha, center + alpha].
double mass_outside(const Posterior& post, double center, double alpha);

}  // namespace lossrobust
