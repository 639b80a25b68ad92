#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "stablab/attacks.hpp"
#include "stablab/dataset.hpp"
#include "stablab/gaussmix.hpp"
#include "stablab/models.hpp"

namespace stablab {

/// Hidden layer widths; input and output sizes come from the dataset
/// (one logit for binary tasks, k logits otherwise).
struct Architecture {
  std::vector<int> hidden;

  std::vector<int> layer_dims(const Dataset& ds) const;
};

struct LrDrop {
  int epoch;      // zero-based epoch from which the factor applies
  double factor;
};

struct TrainHyper {
  int epochs = 30;
  int batch_size = 64;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<LrDrop> lr_drops{{20, 0.1}, {26, 0.1}};
  std::uint64_t seed = 0;
  /// Share of the training set held out for model selection.
  double holdout_fraction = 0.1;
  /// Adversarial training ramps its radius linearly up to eps_d over this
  /// many epochs (0 = full radius from the start).
  int warmup_epochs = 0;

  void validate() const;
  double lr_at(int epoch) const;
};

/// The three l_inf radii: poison (attack), crafting-model training, defense.
struct BudgetSet {
  double eps_a = 0.0;
  double eps_c = 0.0;
  double eps_d = 0.0;

  /// eps_c = 0.25 eps_a and eps_d = eps_a.
  static BudgetSet from_attack(double eps_a) { return {eps_a, 0.25 * eps_a, eps_a}; }
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double holdout_metric = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Mlp model;
  /// Epoch whose weights were returned; -1 when no epoch ran.
  int best_epoch = -1;
  double holdout_metric = std::numeric_limits<double>::quiet_NaN();
  std::vector<EpochLog> log;
};

/// Inner maximization used during adversarial training: 10 steps of size
/// eps/4 from a uniform random start.
AttackConfig at_inner_attack(double eps_d, bool clamp);
/// Holdout attack for early stopping (same recipe as the inner attack).
AttackConfig early_stop_attack(double eps_d, bool clamp);

/// Mini-batch SGD with momentum and weight decay on the clean data. Returns
/// the epoch with the best holdout accuracy.
TrainResult train_natural(const Architecture& arch, const Dataset& ds, const TrainHyper& hyper);

/// PGD adversarial training: every batch is replaced by its PGD-maximized
/// version before the step; selection by holdout robust accuracy at eps_d.
/// With eps_d = 0 the run is identical to train_natural.
TrainResult train_pgd_at(const Architecture& arch, const Dataset& ds, const TrainHyper& hyper,
                         double eps_d, const AttackConfig& inner);

struct LinearFitOptions {
  int max_iters = 4000;
  /// Stop once the relative objective decrease per iteration falls below this.
  double tol = 1e-12;
  double l2 = 0.0;
};

/// Minimizes the mean of log(1 + exp(-(y (w.x + b) - eps_d ||w||_1))), the
/// logistic loss under the exact inner maximum, by accelerated projected
/// gradient on the split w = u - v with u, v >= 0. Binary data only.
LinearClassifier train_linear_robust_exact(const Dataset& ds, double eps_d,
                                           const LinearFitOptions& options = {});
/// Same, on n fresh samples from `spec`.
LinearClassifier train_linear_robust_exact(const GaussMixSpec& spec, Eigen::Index n,
                                           std::uint64_t seed, double eps_d,
                                           const LinearFitOptions& options = {});

}  // namespace stablab
