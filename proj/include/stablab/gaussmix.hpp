#pragma once

#include <string>

#include "stablab/dataset.hpp"
#include "stablab/linear.hpp"
#include "stablab/numerics.hpp"

namespace stablab {

enum class ShiftKind { None, Adversarial, Hypocritical };

/// Training-time shift of every feature: towards -y (Adversarial) or
/// towards +y (Hypocritical) by eps.
struct ShiftMode {
  ShiftKind kind = ShiftKind::None;
  double eps = 0.0;

  static ShiftMode none() { return {}; }
  static ShiftMode adversarial(double eps) { return {ShiftKind::Adversarial, eps}; }
  static ShiftMode hypocritical(double eps) { return {ShiftKind::Hypocritical, eps}; }
};

/// Binary mixture: y uniform on {-1, +1}; x_1 ~ N(y mu_1, sigma^2) carries the
/// robust signal and x_2..x_{d+1} ~ N(y mu_nr, sigma^2) the weak non-robust
/// one, with (mu_1, mu_nr) = (1, eta) before any shift.
struct GaussMixSpec {
  double eta = 0.1;
  double sigma = 0.25;
  int d = 50;
  ShiftMode shift{};

  Eigen::Index dim() const noexcept { return d + 1; }
  void validate() const;
  std::string describe() const;
};

/// eta/2 <= eps < 1/2, the regime in which an adversarial shift is harmless.
bool is_moderate_adversarial_shift(const GaussMixSpec& spec);

/// mu such that class-y inputs are N(y mu, sigma^2 I).
Vector per_class_mean(const GaussMixSpec& spec);

/// n i.i.d. draws; class 1 <-> y = +1. Unbounded features.
Dataset sample(const GaussMixSpec& spec, Eigen::Index n, Rng& rng);

/// Exact l_inf adversarial risk of sign(w.x + b) at radius eps_d:
///   1/2 Phi((eps ||w||_1 - w.mu - b) / (sigma ||w||_2))
/// + 1/2 Phi((eps ||w||_1 - w.mu + b) / (sigma ||w||_2)).
/// eps_d = 0 gives the natural risk.
Probability analytic_adv_risk_linear(const LinearClassifier& f, const GaussMixSpec& spec,
                                     double eps_d);

/// Upper bound on the adversarial accuracy of w_nat at eps = 2 eta:
/// Phi((1 - d eta^2) / (sigma sqrt(1 + d eta^2))).
Probability prop1_nat_bound(double eta, double sigma, int d);

/// Adversarial accuracy of w_rob at eps = 2 eta: Phi((1 - 2 eta) / sigma).
Probability prop1_rob_exact(double eta, double sigma);

struct SearchConfig {
  int grid_points = 400;
  double ratio_lo = 0.0;
  /// Upper end of the ratio grid; non-positive means 2 * eta.
  double ratio_hi = 0.0;
  double tol = 1e-6;
};

/// Argument z of Phi(z), the adversarial risk of w = (1, r, ..., r), b = 0.
double reduced_risk_argument(const GaussMixSpec& spec, double eps_d, double ratio);

/// Best linear l_inf-robust classifier in the symmetric family
/// w = (1, r, ..., r), b = 0: coarse grid over r, then golden-section
/// refinement around the best cell.
LinearClassifier optimal_linear_robust(const GaussMixSpec& spec, double eps_d,
                                       const SearchConfig& grid = {});

/// Draws are split into this many shards, each with its own generator seeded
/// from `rng`; shards run on all available cores and are summed in order.
inline constexpr Eigen::Index kMonteCarloShards = 16;

/// Fraction of n fresh draws misclassified after the exact worst-case
/// perturbation delta = -eps y sign(w).
Probability monte_carlo_adv_risk(const LinearClassifier& f, const GaussMixSpec& spec,
                                 double eps_d, Eigen::Index n, Rng& rng);

}  // namespace stablab
