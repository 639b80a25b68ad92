#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "stablab/eval.hpp"
#include "stablab/poison.hpp"
#include "stablab/training.hpp"

namespace stablab {

/// One named pass/fail check with a human-readable detail line.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Theorem checks on the Gaussian mixture: the two accuracy formulas against
/// Monte Carlo, the optimal linear robust classifier under each shift, and
/// the budget-dominance mechanism. `mc_samples` sizes each Monte Carlo run.
std::vector<Check> run_gauss_checks(std::uint64_t seed, Eigen::Index mc_samples = 1'000'000);

struct MlpExperimentConfig {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::vector<int> classes{3, 8};
  std::size_t per_class_limit = 0;
  double train_fraction = 0.8;
  double eps_a = 0.1;
  Architecture arch{{32, 32}};
  /// Defaults plus a 10-epoch radius warm-up; without it PGD-AT on poisoned
  /// pixels tends to stall at a constant classifier.
  TrainHyper hyper = [] {
    TrainHyper h;
    h.warmup_epochs = 10;
    return h;
  }();
  /// Defense budgets tried on hypocritical data, as multiples of eps_a.
  std::vector<double> recovery_multipliers{1.25, 1.5, 1.75, 2.0};
  std::uint64_t master_seed = 0;
};

struct MlpExperimentReport {
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  double crafting_eps_c = 0.0;
  SweepResult clean;
  SweepResult hypocritical;
  SweepResult adversarial;
  double clean_pgd20 = 0.0;
  double hyp_pgd20 = 0.0;
  double adv_pgd20 = 0.0;
  double best_eps_d = 0.0;
  double best_hyp_pgd20 = 0.0;
  /// Fingerprints of every dataset and model the run produced, in order.
  std::vector<std::uint64_t> artifact_hashes;

  double gap() const { return clean_pgd20 - hyp_pgd20; }
  double recovered() const { return best_hyp_pgd20 - hyp_pgd20; }
};

/// Load a two-class IDX subset, craft hypocritical and adversarial poisons
/// against a slightly robust crafting model, adversarially train on each
/// training set, and sweep defense budgets on the hypocritical one.
MlpExperimentReport run_mlp_experiment(const MlpExperimentConfig& cfg,
                                       std::ostream* progress = nullptr);

/// Direction checks on an experiment report: poisoning lowers PGD-20
/// robustness by at least `min_gap`, adversarial poison hurts less than
/// hypocritical poison, and a larger budget recovers half of the gap.
std::vector<Check> mlp_experiment_checks(const MlpExperimentReport& report, double eps_a,
                                         double min_clean_robust = 0.60, double min_gap = 0.05);

}  // namespace stablab
