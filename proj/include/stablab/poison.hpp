#pragma once

#include <cstdint>
#include <string>

#include "stablab/attacks.hpp"
#include "stablab/dataset.hpp"
#include "stablab/models.hpp"
#include "stablab/training.hpp"

namespace stablab {

/// Hypocritical perturbations minimize the crafting model's loss (reinforce
/// features that agree with the label); adversarial ones maximize it.
enum class PoisonKind { Hypocritical, Adversarial };

const char* to_string(PoisonKind kind);

struct CraftConfig {
  double eps_a = 0.0;
  PoisonKind kind = PoisonKind::Hypocritical;
  AttackConfig pgd;
  /// Defense budget used to train the crafting model (0 = natural training).
  double crafting_eps_c = 0.0;
  int crafting_epochs = 10;

  /// 100 PGD steps of eps_a / 10 from a zero start, crafting budget
  /// 0.25 eps_a, 10 crafting epochs.
  static CraftConfig defaults(double eps_a, PoisonKind kind, bool clamp);
  void validate() const;
};

/// Short PGD-AT run at radius crafting_eps_c, a "slightly robust" model.
TrainResult train_crafting_model(const Architecture& arch, const Dataset& ds,
                                 const CraftConfig& cfg, const TrainHyper& hyper);

/// Per-example PGD perturbation against the fixed crafting model. Labels are
/// never changed; rows move by at most eps_a in l_inf and stay in [0, 1] when
/// the dataset is bounded. With eps_a = 0 the input is returned unchanged.
Dataset craft(const Dataset& ds, const Mlp& crafting_model, const CraftConfig& cfg);

/// Relabels every row with a uniformly drawn target class t and moves it
/// (within eps) to minimize the model's loss towards t, so only the
/// model's non-robust features predict the new labels.
Dataset nonrobust_feature_dataset(const Dataset& ds, const Mlp& model, double eps, Rng& rng);

}  // namespace stablab
