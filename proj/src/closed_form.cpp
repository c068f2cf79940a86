#include "lossrobust/closed_form.hpp"

#include <cmath>

#include "lossrobust/errors.hpp"
#include "lossrobust/numerics.hpp"

namespace lossrobust::closed_form {

double standardized_expected_loss(double z, double k_above, double k_below) {
  const double Phi = normal_cdf(z), ph = normal_pdf(z);
  return 0.5 * (k_above * ((z * z + 1.0) * Phi + z * ph) + k_below * ((z * z + 1.0) * (1.0 - Phi) - z * ph));
}

double standardized_root(double k_above, double k_below, double tol) {
  const auto slope = [&](double z) {
    const double Phi = normal_cdf(z), ph = normal_pdf(z);
    return k_above * (z * Phi + ph) + k_below * (z * (1.0 - Phi) - ph);
  };
  return bisect_root(slope, {-10.0, 10.0}, tol);
}

AsymmetricQuadraticConstants asymmetric_quadratic_constants(double k1, double k2) {
  if (!(k1 > 0.0) || k1 > k2) throw DomainError("asymmetric quadratic constants: requires 0 < k1 <= k2");
  AsymmetricQuadraticConstants c;
  c.r_upper = standardized_root(k2, k1);
  c.r_lower = standardized_root(k1, k2);
  c.c_upper = standardized_expected_loss(0.0, k2, k1) - standardized_expected_loss(c.r_upper, k2, k1);
  c.c_lower = standardized_expected_loss(0.0, k1, k2) - standardized_expected_loss(c.r_lower, k1, k2);
  return c;
}

double asymmetric_quadratic_diameter(double k1, double k2, double lambda_n) {
  const auto c = asymmetric_quadratic_constants(k1, k2);
  return (c.r_lower - c.r_upper) / std::sqrt(lambda_n);
}

double asymmetric_quadratic_sup_regret_at_mean(double k1, double k2, double lambda_n) {
  const auto c = asymmetric_quadratic_constants(k1, k2);
  return std::max(c.c_upper, c.c_lower) / lambda_n;
}

double asymmetric_quadratic_range_at_mean(double k1, double k2, double lambda_n) {
  return 0.5 * (k2 - k1) / lambda_n;
}

double smooth_envelope_diameter(double lambda_n) { return 1.0 / lambda_n; }

}  // namespace lossrobust::closed_form
