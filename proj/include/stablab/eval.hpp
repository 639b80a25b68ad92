#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stablab/attacks.hpp"
#include "stablab/dataset.hpp"
#include "stablab/models.hpp"
#include "stablab/training.hpp"

namespace stablab {

enum class AttackKind { Fgsm, Pgd };

struct NamedAttack {
  std::string name;
  AttackKind kind = AttackKind::Pgd;
  AttackConfig cfg;
};

/// FGSM, PGD-20 and PGD-100 (random start, step eps/4) at radius eps_a.
std::vector<NamedAttack> default_eval_attacks(double eps_a, bool clamp);

double accuracy(const Mlp& model, const Dataset& ds);

/// Fraction of rows classified correctly both before and after the attack.
double robust_accuracy(const Mlp& model, const Dataset& ds, const NamedAttack& attack, Rng& rng);
double robust_accuracy(const Mlp& model, const Dataset& ds, const AttackConfig& cfg, Rng& rng);

struct EvalReport {
  double natural_acc = 0.0;
  /// (attack name, robust accuracy) in the order the attacks were given.
  std::vector<std::pair<std::string, double>> robust_acc;
  Eigen::Index n_eval = 0;
  std::vector<NamedAttack> attacks;
  std::uint64_t seed = 0;
  std::string provenance;

  double robust(const std::string& name) const;
};

/// Attack i draws its random starts from Rng(derive_seed(seed, i), kAttack).
EvalReport evaluate(const Mlp& model, const Dataset& test, const std::vector<NamedAttack>& attacks,
                    std::uint64_t seed);

/// One training set in a sweep, labelled by how it was produced.
struct SweepInput {
  std::string poison;  // "clean", "hyp", "adv", ...
  Dataset train;
};

struct SweepConfig {
  Architecture arch;
  TrainHyper hyper;
  double eps_a = 0.0;
  std::vector<double> eps_d_list;
  std::uint64_t master_seed = 0;
};

struct SweepRow {
  double eps_d = 0.0;
  std::string poison;
  double natural_acc = 0.0;
  double fgsm = 0.0;
  double pgd20 = 0.0;
  double pgd100 = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  const SweepRow* find(double eps_d, const std::string& poison) const;
};

/// Row seed for the row_index-th cell of a sweep.
std::uint64_t sweep_row_seed(std::uint64_t master_seed, std::size_t row_index);

/// Trains one PGD-AT model per (input, eps_d) cell, inputs outermost, and
/// evaluates each at eps_a with the default attacks. A failing cell records
/// its error and the sweep continues.
SweepResult budget_sweep(const std::vector<SweepInput>& inputs, const Dataset& test,
                         const SweepConfig& cfg);

/// Header `eps_d,poison,natural_acc,fgsm,pgd20,pgd100,seed`, six decimals.
/// Failed rows carry "nan" accuracies.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace stablab
