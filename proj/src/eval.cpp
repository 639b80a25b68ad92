#include "stablab/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace stablab {

std::vector<NamedAttack> default_eval_attacks(double eps_a, bool clamp) {
  AttackConfig fgsm_cfg{eps_a, 1, eps_a, AttackInit::Zero, AttackMode::Maximize, clamp};
  return {
      {"fgsm", AttackKind::Fgsm, fgsm_cfg},
      {"pgd20", AttackKind::Pgd,
       AttackConfig::pgd(eps_a, 20, 0.25, AttackInit::UniformRandom, AttackMode::Maximize, clamp)},
      {"pgd100", AttackKind::Pgd,
       AttackConfig::pgd(eps_a, 100, 0.25, AttackInit::UniformRandom, AttackMode::Maximize, clamp)},
  };
}

double accuracy(const Mlp& model, const Dataset& ds) {
  const auto predicted = predict(model, ds.features);
  Eigen::Index hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

namespace {

// Rows are attacked in fixed-size chunks to bound memory on large test sets.
constexpr Eigen::Index kChunk = 512;

}  // namespace

double robust_accuracy(const Mlp& model, const Dataset& ds, const NamedAttack& attack, Rng& rng) {
  const LossKind kind = model.default_loss();
  const auto labels = loss_labels(ds, kind);
  const auto clean_pred = predict(model, ds.features);
  Eigen::Index hits = 0;
  for (Eigen::Index start = 0; start < ds.size(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, ds.size() - start);
    const auto rows = ds.features.middleRows(start, count);
    const std::span<const int> y(labels.data() + start, static_cast<std::size_t>(count));
    const RowMatrix attacked =
        attack.kind == AttackKind::Fgsm
            ? fgsm_batch(model, rows, y, attack.cfg.eps, AttackMode::Maximize, attack.cfg.clamp)
            : pgd_batch(model, rows, y, attack.cfg, rng);
    const auto adv_pred = predict(model, attacked);
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto row = static_cast<std::size_t>(start + i);
      hits += clean_pred[row] == ds.labels[row] &&
              adv_pred[static_cast<std::size_t>(i)] == ds.labels[row];
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double robust_accuracy(const Mlp& model, const Dataset& ds, const AttackConfig& cfg, Rng& rng) {
  return robust_accuracy(model, ds, NamedAttack{"pgd", AttackKind::Pgd, cfg}, rng);
}

double EvalReport::robust(const std::string& name) const {
  for (const auto& [attack, acc] : robust_acc) {
    if (attack == name) return acc;
  }
  throw_domain("EvalReport: no attack named " + name);
}

EvalReport evaluate(const Mlp& model, const Dataset& test, const std::vector<NamedAttack>& attacks,
                    std::uint64_t seed) {
  test.validate();
  EvalReport report;
  report.natural_acc = accuracy(model, test);
  report.n_eval = test.size();
  report.attacks = attacks;
  report.seed = seed;
  report.provenance = test.provenance;
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    if (attacks[i].cfg.mode != AttackMode::Maximize) {
      throw_config("evaluate: attack " + attacks[i].name + " must maximize the loss");
    }
    Rng rng(derive_seed(seed, i), streams::kAttack);
    report.robust_acc.emplace_back(attacks[i].name, robust_accuracy(model, test, attacks[i], rng));
  }
  return report;
}

const SweepRow* SweepResult::find(double eps_d, const std::string& poison) const {
  for (const auto& row : rows) {
    if (row.poison == poison && std::abs(row.eps_d - eps_d) <= 1e-12 * std::max(1.0, eps_d)) {
      return &row;
    }
  }
  return nullptr;
}

std::uint64_t sweep_row_seed(std::uint64_t master_seed, std::size_t row_index) {
  return derive_seed(master_seed, row_index);
}

SweepResult budget_sweep(const std::vector<SweepInput>& inputs, const Dataset& test,
                         const SweepConfig& cfg) {
  if (cfg.eps_d_list.empty()) throw_config("budget_sweep: eps_d_list is empty");
  if (inputs.empty()) throw_config("budget_sweep: no training sets");
  SweepResult result;
  std::size_t row_index = 0;
  for (const auto& input : inputs) {
    for (double eps_d : cfg.eps_d_list) {
      if (result.find(eps_d, input.poison)) {
        throw_config("budget_sweep: duplicate cell (" + std::to_string(eps_d) + ", " +
                     input.poison + ")");
      }
      SweepRow row;
      row.eps_d = eps_d;
      row.poison = input.poison;
      row.seed = sweep_row_seed(cfg.master_seed, row_index++);
      try {
        TrainHyper hyper = cfg.hyper;
        hyper.seed = row.seed;
        const TrainResult trained = train_pgd_at(cfg.arch, input.train, hyper, eps_d,
                                                 at_inner_attack(eps_d, input.train.bounded));
        const EvalReport report = evaluate(
            trained.model, test, default_eval_attacks(cfg.eps_a, test.bounded), row.seed);
        row.natural_acc = report.natural_acc;
        row.fgsm = report.robust("fgsm");
        row.pgd20 = report.robust("pgd20");
        row.pgd100 = report.robust("pgd100");
      } catch (const Error& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.natural_acc = row.fgsm = row.pgd20 = row.pgd100 = nan;
        row.error = e.what();
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "eps_d,poison,natural_acc,fgsm,pgd20,pgd100,seed\n";
  char buf[256];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%s,%.6f,%.6f,%.6f,%.6f,%llu\n", row.eps_d,
                  row.poison.c_str(), row.natural_acc, row.fgsm, row.pgd20, row.pgd100,
                  static_cast<unsigned long long>(row.seed));
    out << buf;
  }
}

}  // namespace stablab
