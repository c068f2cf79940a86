#pragma once

#include <optional>
#include <string>

#include "lossrobust/losses.hpp"
#include "lossrobust/posteriors.hpp"

namespace lossrobust {

// l^n(d): posterior expectation of l(., d).
double expected_loss(const Loss& loss, const Posterior& post, double d);

// Posterior expectation of a partial derivative of l at decision d.
double expected_partial(const Loss& loss, Partial which, const Posterior& post, double d);

// [mean - 20 sd, mean + 20 sd] of the posterior.
Interval default_bracket(const Posterior& post);

struct BayesAction {
  double action = 0.0;
  double expected_loss = 0.0;
  double gradient = 0.0;  // D01 l^n at the action
  bool unique = true;     // false when l^n is flat across the bracket
  int evaluations = 0;
};

// Minimizer of l^n over the bracket: golden section with parabolic steps,
// argument tolerance 1e-8, then a regula-falsi polish on D01 l^n. The bracket
// widens (up to 8 doublings) while the minimum sits on an endpoint.
BayesAction bayes_action(const Loss& loss, const Posterior& post, std::optional<Interval> bracket = std::nullopt);

struct ActionSet {
  double lower = 0.0;
  double upper = 0.0;
  std::string lower_label;
  std::string upper_label;
  bool unique = true;

  double diameter() const { return upper - lower; }
};

// Envelope classes: the interval between the Bayes actions of U and L.
// Finite (and prior-ratio) classes: min and max over member actions.
ActionSet action_set(const LossClass& cls, const Posterior& post, std::optional<Interval> bracket = std::nullopt);

double diameter(const ActionSet& set);

}  // namespace lossrobust
