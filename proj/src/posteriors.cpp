#include "lossrobust/posteriors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "lossrobust/errors.hpp"

namespace lossrobust {

namespace {

constexpr double kDegenerateSd = 1e-13;
constexpr double kNormalWindow = 10.0;
constexpr double kGammaTail = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double integrate_density(const std::function<double(double)>& weighted, Interval window,
                         std::span<const double> breakpoints) {
  std::vector<double> cuts{window.lo};
  for (double b : breakpoints) {
    if (b > window.lo && b < window.hi) cuts.push_back(b);
  }
  cuts.push_back(window.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Endpoints are sampled one ulp inside so a jump at a cut takes this piece's side.
    const double a = cuts[i], b = cuts[i + 1];
    const double a_in = std::nextafter(a, b), b_in = std::nextafter(b, a);
    const auto inside = [&](double s) { return weighted(s <= a ? a_in : (s >= b ? b_in : s)); };
    const SimpsonResult piece = composite_simpson(inside, a, b);
    if (!piece.converged) {
      std::ostringstream msg;
      msg << "expectation did not converge on [" << cuts[i] << ", " << cuts[i + 1] << "] after "
          << piece.panels << " panels (last estimate " << piece.value << ")";
      throw NumericalError(msg.str());
    }
    total += piece.value;
  }
  return total;
}

}  // namespace

double NormalPosterior::sd() const { return 1.0 / std::sqrt(precision); }

double NormalPosterior::density(double sigma) const {
  const double z = (sigma - mu) * std::sqrt(precision);
  return normal_pdf(z) * std::sqrt(precision);
}

double GammaPosterior::sd() const { return std::sqrt(shape) / rate; }

double GammaPosterior::mode() const { return shape >= 1.0 ? (shape - 1.0) / rate : 0.0; }

double GammaPosterior::density(double sigma) const {
  if (sigma <= 0.0) return 0.0;
  return boost::math::gamma_p_derivative(shape, rate * sigma) * rate;
}

double GammaPosterior::quantile(double p) const { return boost::math::gamma_p_inv(shape, p) / rate; }

GridPosterior::GridPosterior(std::vector<double> nodes, std::vector<double> log_weights)
    : nodes_(std::move(nodes)), log_weights_(std::move(log_weights)) {
  if (nodes_.empty() || nodes_.size() != log_weights_.size()) {
    throw DomainError("grid posterior needs equally many nodes and log-weights");
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("grid posterior nodes must be strictly increasing");
  }
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  if (!std::isfinite(top)) throw DegenerateError("grid posterior has zero mass everywhere");
  double sum = 0.0;
  for (double lw : log_weights_) sum += std::exp(lw - top);
  const double log_norm = top + std::log(sum);
  weights_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    log_weights_[i] -= log_norm;
    weights_[i] = std::exp(log_weights_[i]);
  }
}

double GridPosterior::mean() const {
  return std::inner_product(nodes_.begin(), nodes_.end(), weights_.begin(), 0.0);
}

double GridPosterior::sd() const {
  const double m = mean();
  double var = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) var += weights_[i] * (nodes_[i] - m) * (nodes_[i] - m);
  return std::sqrt(var);
}

double GridPosterior::mode() const {
  const auto it = std::max_element(log_weights_.begin(), log_weights_.end());
  return nodes_[static_cast<std::size_t>(it - log_weights_.begin())];
}

GridPosterior GridPosterior::shifted(double c) const {
  std::vector<double> moved(nodes_);
  for (double& x : moved) x += c;
  return GridPosterior(std::move(moved), log_weights_);
}

NormalPosterior normal_update(double mu0, double lambda0, double obs_precision, std::span<const double> data) {
  if (!(lambda0 > 0.0) || !(obs_precision > 0.0)) {
    throw DomainError("normal_update: prior and observation precisions must be positive");
  }
  const double sum = std::accumulate(data.begin(), data.end(), 0.0);
  const double lambda_n = lambda0 + static_cast<double>(data.size()) * obs_precision;
  return {(lambda0 * mu0 + obs_precision * sum) / lambda_n, lambda_n};
}

GammaPosterior gamma_update(std::span<const double> data) {
  if (data.empty()) throw DomainError("gamma_update: data must be nonempty");
  double sum = 0.0;
  for (double x : data) {
    if (!(x > 0.0)) throw DomainError("gamma_update: observations must be positive");
    sum += x;
  }
  return {static_cast<double>(data.size()), sum};
}

GammaPosterior gamma_from_summary(double n, double sum) {
  if (!(n > 0.0) || !(sum > 0.0)) throw DomainError("gamma posterior needs positive shape and rate");
  return {n, sum};
}

GridPosterior grid_posterior(const LogDensity& prior_log_density, const LogLikelihood& log_likelihood,
                             std::span<const double> data, Interval support, int resolution) {
  if (!(std::isfinite(support.lo) && std::isfinite(support.hi)) || !(support.hi > support.lo)) {
    throw DomainError("grid_posterior: support must be a finite, nonempty interval");
  }
  if (resolution < 16) throw DomainError("grid_posterior: resolution must be at least 16");
  const int panels = resolution % 2 == 0 ? resolution : resolution + 1;
  const double h = support.width() / panels;

  std::vector<double> nodes(static_cast<std::size_t>(panels) + 1);
  std::vector<double> log_w(nodes.size());
  bool any_mass = false;
  for (int i = 0; i <= panels; ++i) {
    const double s = i == panels ? support.hi : support.lo + i * h;
    const double simpson = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double lw = prior_log_density(s) + log_likelihood(s, data) + std::log(simpson);
    nodes[static_cast<std::size_t>(i)] = s;
    log_w[static_cast<std::size_t>(i)] = std::isnan(lw) ? -std::numeric_limits<double>::infinity() : lw;
    if (std::isfinite(lw)) any_mass = true;
  }
  if (!any_mass) throw DegenerateError("grid_posterior: likelihood vanishes over the whole support");
  return GridPosterior(std::move(nodes), std::move(log_w));
}

double posterior_mean(const Posterior& post) {
  return std::visit([](const auto& p) { return p.mean(); }, post);
}

double posterior_sd(const Posterior& post) {
  return std::visit([](const auto& p) { return p.sd(); }, post);
}

double posterior_mode(const Posterior& post) {
  return std::visit([](const auto& p) { return p.mode(); }, post);
}

Interval integration_window(const Posterior& post) {
  return std::visit(Overloaded{
                        [](const NormalPosterior& p) {
                          return Interval{p.mu - kNormalWindow * p.sd(), p.mu + kNormalWindow * p.sd()};
                        },
                        [](const GammaPosterior& p) {
                          return Interval{p.quantile(kGammaTail), p.quantile(1.0 - kGammaTail)};
                        },
                        [](const GridPosterior& p) {
                          return Interval{p.nodes().front(), p.nodes().back()};
                        },
                    },
                    post);
}

double expectation(const Posterior& post, const std::function<double(double)>& g,
                   std::span<const double> breakpoints) {
  return std::visit(
      Overloaded{
          [&](const GammaPosterior& p) {
            if (p.sd() < kDegenerateSd) return g(p.mode());
            const double a = p.shape, r = p.rate;
            const Interval w = integration_window(post);
            if (a < 1.0) {
              // t = s^a straightens the s^(a-1) singularity at 0.
              const double c = std::exp(a * std::log(r) - std::lgamma(a + 1.0));
              const auto weighted = [&](double t) {
                const double s = std::pow(t, 1.0 / a);
                const double dens = c * std::exp(-r * s);
                return dens == 0.0 ? 0.0 : g(s) * dens;
              };
              std::vector<double> cuts;
              for (double b : breakpoints) {
                if (b > 0.0) cuts.push_back(std::pow(b, a));
              }
              return integrate_density(weighted, {std::pow(w.lo, a), std::pow(w.hi, a)}, cuts);
            }
            // Log-density anchored at the mode; one special-function call per expectation.
            const double mode = (a - 1.0) / r;
            const double log_at_mode =
                a > 1.0 ? std::log(boost::math::gamma_p_derivative(a, a - 1.0) * r) : std::log(r);
            const auto weighted = [&](double s) {
              if (s <= 0.0) return 0.0;
              const double log_ratio = a > 1.0 ? (a - 1.0) * std::log(s / mode) : 0.0;
              const double dens = std::exp(log_at_mode + log_ratio - r * (s - mode));
              return dens == 0.0 ? 0.0 : g(s) * dens;
            };
            return integrate_density(weighted, w, breakpoints);
          },
          [&](const GridPosterior& p) {
            double total = 0.0;
            const auto nodes = p.nodes();
            const auto w = p.weights();
            for (std::size_t i = 0; i < nodes.size(); ++i) {
              if (w[i] == 0.0) continue;
              const double v = g(nodes[i]);
              if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "integrand is not finite at grid node " << nodes[i];
                throw NumericalError(msg.str());
              }
              total += w[i] * v;
            }
            return total;
          },
          [&](const auto& p) {
            if (p.sd() < kDegenerateSd) return g(p.mode());
            const auto weighted = [&](double s) {
              const double dens = p.density(s);
              return dens == 0.0 ? 0.0 : g(s) * dens;
            };
            return integrate_density(weighted, integration_window(post), breakpoints);
          },
      },
      post);
}

double mass_outside(const Posterior& post, double center, double alpha) {
  return std::visit(Overloaded{
                        [&](const NormalPosterior& p) {
                          const double s = std::sqrt(p.precision);
                          return normal_cdf((center - alpha - p.mu) * s) +
                                 normal_cdf(-(center + alpha - p.mu) * s);
                        },
                        [&](const GammaPosterior& p) {
                          const double lo = std::max(0.0, center - alpha);
                          const double below = lo > 0.0 ? boost::math::gamma_p(p.shape, p.rate * lo) : 0.0;
                          return below + boost::math::gamma_q(p.shape, p.rate * (center + alpha));
                        },
                        [&](const GridPosterior& p) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < p.nodes().size(); ++i) {
                            if (std::abs(p.nodes()[i] - center) > alpha) m += p.weights()[i];
                          }
                          return m;
                        },
                    },
                    post);
}

}  // namespace lossrobust
