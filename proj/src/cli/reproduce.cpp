#include "stablab/reproduce.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "stablab/gaussmix.hpp"

namespace stablab {

namespace {

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

double logistic(double margin) {
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

}  // namespace

std::vector<Check> run_gauss_checks(std::uint64_t seed, Eigen::Index mc_samples) {
  std::vector<Check> checks;

  {
    const double eta = 0.1, sigma = 1.0 / 3.0;
    const int d = 300;
    const GaussMixSpec clean{eta, sigma, d, {}};
    const double nat_bound = prop1_nat_bound(eta, sigma, d);
    const double rob = prop1_rob_exact(eta, sigma);
    Rng rng(seed, streams::kMonteCarlo);
    const auto n = static_cast<double>(mc_samples);
    const double mc_rob = 1.0 - monte_carlo_adv_risk(robust_classifier(d), clean, 2 * eta, mc_samples, rng);
    const double se_rob = std::sqrt(rob * (1 - rob) / n);
    const LinearClassifier nat = natural_classifier(eta, d);
    const double exact_nat = 1.0 - analytic_adv_risk_linear(nat, clean, 2 * eta);
    const double mc_nat = 1.0 - monte_carlo_adv_risk(nat, clean, 2 * eta, mc_samples, rng);
    const double se_nat = std::max(std::sqrt(exact_nat * (1 - exact_nat) / n), 1.0 / n);
    checks.push_back({"eps = 2 eta: natural classifier accuracy bound below 1%",
                      nat_bound < 0.01 && std::abs(nat_bound - 0.0013499) < 1e-6,
                      fmt("bound=%.7f", nat_bound)});
    checks.push_back({"eps = 2 eta: robust classifier accuracy above 99%",
                      rob > 0.99 && std::abs(rob - 0.99180) < 1e-5, fmt("exact=%.7f", rob)});
    checks.push_back({"eps = 2 eta: Monte Carlo matches robust classifier accuracy",
                      std::abs(mc_rob - rob) <= 3 * se_rob,
                      fmt("mc=%.7f exact=%.7f se=%.2e", mc_rob, rob, se_rob)});
    checks.push_back({"eps = 2 eta: Monte Carlo natural accuracy under the bound",
                      std::abs(mc_nat - exact_nat) <= 3 * se_nat && exact_nat <= nat_bound,
                      fmt("mc=%.7f exact=%.7f bound=%.7f", mc_nat, exact_nat, nat_bound)});
  }

  const auto ratio_at = [](ShiftMode shift, double eps_d) {
    return nonrobust_ratio(optimal_linear_robust(GaussMixSpec{0.1, 0.25, 50, shift}, eps_d));
  };
  {
    const double r = ratio_at(ShiftMode::adversarial(0.2), 0.2);
    checks.push_back({"adversarial shift: optimum at eps is the robust classifier", r <= 1e-3,
                      fmt("ratio=%.3e", r)});
  }
  {
    const double r = ratio_at(ShiftMode::hypocritical(0.2), 0.2);
    checks.push_back({"hypocritical shift: optimum at eps is the natural classifier",
                      std::abs(r - 0.1) <= 5e-3, fmt("ratio=%.6f", r)});
  }
  {
    const double r_big = ratio_at(ShiftMode::hypocritical(0.2), 0.3);
    const double r_small = ratio_at(ShiftMode::hypocritical(0.2), 0.28);
    checks.push_back({"hypocritical shift: eps + eta removes non-robust weights, less does not",
                      r_big <= 1e-3 && r_small > 0.01,
                      fmt("ratio(0.30)=%.3e ratio(0.28)=%.6f", r_big, r_small)});
  }
  {
    Rng rng(seed, streams::kAttack);
    int violations = 0;
    constexpr int kTrials = 10'000;
    for (int t = 0; t < kTrials; ++t) {
      const auto m = static_cast<Eigen::Index>(1 + rng.below(20));
      LinearClassifier f{Vector(m), rng.normal()};
      for (Eigen::Index j = 0; j < m; ++j) f.w[j] = rng.normal();
      Vector x(m), p(m);
      const double eps = rng.uniform(0.0, 0.5);
      for (Eigen::Index j = 0; j < m; ++j) {
        x[j] = rng.normal();
        p[j] = rng.uniform(-eps, eps);
      }
      const int y = rng.below(2) == 1 ? 1 : -1;
      const Vector poisoned = x + p;
      const Vector far = linear_worst_case(f, poisoned, y, 2 * eps, AttackMode::Maximize);
      const Vector near = linear_worst_case(f, x, y, eps, AttackMode::Maximize);
      if (logistic(y * f.logit(far)) < logistic(y * f.logit(near))) ++violations;
    }
    checks.push_back({"budget dominance: radius 2 eps around x + p bounds radius eps around x",
                      violations == 0, fmt("violations=%.0f of %.0f", violations, kTrials)});
  }
  return checks;
}

MlpExperimentReport run_mlp_experiment(const MlpExperimentConfig& cfg, std::ostream* progress) {
  const auto say = [&](const std::string& line) {
    if (progress) *progress << line << std::endl;
  };
  MlpExperimentReport report;

  const Dataset all = import_idx(cfg.images, cfg.labels, cfg.classes, cfg.per_class_limit);
  Rng split_rng(cfg.master_seed, streams::kSplit);
  auto [train, test] = split(all, cfg.train_fraction, split_rng);
  report.n_train = train.size();
  report.n_test = test.size();
  report.artifact_hashes.push_back(dataset_hash(train));
  report.artifact_hashes.push_back(dataset_hash(test));
  say("data: " + std::to_string(train.size()) + " train / " + std::to_string(test.size()) +
      " test rows");

  CraftConfig hyp_cfg = CraftConfig::defaults(cfg.eps_a, PoisonKind::Hypocritical, train.bounded);
  CraftConfig adv_cfg = CraftConfig::defaults(cfg.eps_a, PoisonKind::Adversarial, train.bounded);
  report.crafting_eps_c = hyp_cfg.crafting_eps_c;

  TrainHyper craft_hyper = cfg.hyper;
  craft_hyper.seed = derive_seed(cfg.master_seed, 1000);
  const TrainResult crafting = train_crafting_model(cfg.arch, train, hyp_cfg, craft_hyper);
  report.artifact_hashes.push_back(model_hash(crafting.model));
  say(fmt("crafting model: eps_c=%.4f, holdout robust acc %.4f", hyp_cfg.crafting_eps_c,
          crafting.holdout_metric));

  const Dataset hyp = craft(train, crafting.model, hyp_cfg);
  const Dataset adv = craft(train, crafting.model, adv_cfg);
  report.artifact_hashes.push_back(dataset_hash(hyp));
  report.artifact_hashes.push_back(dataset_hash(adv));
  say("crafted hypocritical and adversarial training sets");

  SweepConfig sweep;
  sweep.arch = cfg.arch;
  sweep.hyper = cfg.hyper;
  sweep.eps_a = cfg.eps_a;
  sweep.master_seed = cfg.master_seed;
  sweep.eps_d_list = {cfg.eps_a};

  const auto run = [&](const std::string& name, const Dataset& data,
                       const std::vector<double>& budgets) {
    SweepConfig local = sweep;
    local.eps_d_list = budgets;
    SweepResult result = budget_sweep({{name, data}}, test, local);
    for (const auto& row : result.rows) {
      if (row.error) say(name + ": training failed: " + *row.error);
      say("  " + name + fmt(" eps_d=%.4f natural=%.4f pgd20=%.4f", row.eps_d, row.natural_acc,
                            row.pgd20));
      const double values[] = {row.natural_acc, row.fgsm, row.pgd20, row.pgd100};
      report.artifact_hashes.push_back(
          fnv1a64(std::as_bytes(std::span<const double>(values, 4)), row.seed));
    }
    return result;
  };

  report.clean = run("clean", train, {cfg.eps_a});
  report.adversarial = run("adv", adv, {cfg.eps_a});
  std::vector<double> budgets{cfg.eps_a};
  for (double m : cfg.recovery_multipliers) budgets.push_back(m * cfg.eps_a);
  report.hypocritical = run("hyp", hyp, budgets);

  report.clean_pgd20 = report.clean.rows.front().pgd20;
  report.adv_pgd20 = report.adversarial.rows.front().pgd20;
  report.hyp_pgd20 = report.hypocritical.rows.front().pgd20;
  report.best_eps_d = cfg.eps_a;
  report.best_hyp_pgd20 = report.hyp_pgd20;
  for (const auto& row : report.hypocritical.rows) {
    if (row.pgd20 > report.best_hyp_pgd20) {
      report.best_hyp_pgd20 = row.pgd20;
      report.best_eps_d = row.eps_d;
    }
  }
  return report;
}

std::vector<Check> mlp_experiment_checks(const MlpExperimentReport& report, double eps_a,
                                         double min_clean_robust, double min_gap) {
  std::vector<Check> checks;
  checks.push_back({"clean PGD-AT reaches the robustness floor",
                    report.clean_pgd20 >= min_clean_robust,
                    fmt("clean pgd20=%.4f floor=%.2f", report.clean_pgd20, min_clean_robust)});
  checks.push_back({"hypocritical poison lowers PGD-20 robust accuracy",
                    report.gap() >= min_gap,
                    fmt("clean=%.4f hyp=%.4f gap=%.4f", report.clean_pgd20, report.hyp_pgd20,
                        report.gap())});
  checks.push_back({"adversarial poison hurts less than hypocritical poison",
                    report.adv_pgd20 > report.hyp_pgd20,
                    fmt("adv=%.4f hyp=%.4f", report.adv_pgd20, report.hyp_pgd20)});
  checks.push_back({"a larger defense budget recovers half of the gap",
                    report.gap() > 0.0 && report.recovered() >= 0.5 * report.gap(),
                    fmt("recovered=%.4f gap=%.4f", report.recovered(), report.gap())});
  checks.push_back({"best defense budget exceeds the attack budget", report.best_eps_d > eps_a,
                    fmt("best eps_d=%.4f (%.2f x eps_a)", report.best_eps_d,
                        report.best_eps_d / eps_a)});
  return checks;
}

}  // namespace stablab
