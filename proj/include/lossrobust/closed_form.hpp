#pragma once

namespace lossrobust::closed_form {

// Closed forms for the asymmetric squared-error class under a normal posterior
// N(mu, 1/lambda). With sigma = mu + w / sqrt(lambda), the expected loss of a
// weight-(k_above, k_below) member at d = mu + z / sqrt(lambda) is g(z) / lambda,
// independent of mu and lambda.

// g(z) = 0.5 [k_above ((z^2+1) Phi(z) + z phi(z)) + k_below ((z^2+1)(1-Phi(z)) - z phi(z))].
double standardized_expected_loss(double z, double k_above, double k_below);

// Root of g'(z) = k_above (z Phi + phi) + k_below (z (1 - Phi) - phi), by bisection on [-10, 10].
double standardized_root(double k_above, double k_below, double tol = 1e-13);

struct AsymmetricQuadraticConstants {
  double r_upper = 0.0;  // d_U = mu + r_upper / sqrt(lambda), negative for k1 < k2
  double r_lower = 0.0;  // d_L = mu + r_lower / sqrt(lambda)
  double c_upper = 0.0;  // lambda (U^n(mu) - U^n(d_U))
  double c_lower = 0.0;  // lambda (L^n(mu) - L^n(d_L))
};

AsymmetricQuadraticConstants asymmetric_quadratic_constants(double k1, double k2);

double asymmetric_quadratic_diameter(double k1, double k2, double lambda_n);
double asymmetric_quadratic_sup_regret_at_mean(double k1, double k2, double lambda_n);
double asymmetric_quadratic_range_at_mean(double k1, double k2, double lambda_n);

// Envelope {f(d - s), f(s - d)} with f(t) = exp(-t) + t - 1: the Bayes actions
// are mu -/+ 1 / (2 lambda), so the diameter is 1 / lambda.
double smooth_envelope_diameter(double lambda_n);

}  // namespace lossrobust::closed_form
