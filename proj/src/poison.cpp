#include "stablab/poison.hpp"

#include <cmath>
#include <sstream>

namespace stablab {

const char* to_string(PoisonKind kind) {
  return kind == PoisonKind::Hypocritical ? "hyp" : "adv";
}

CraftConfig CraftConfig::defaults(double eps_a, PoisonKind kind, bool clamp) {
  CraftConfig cfg;
  cfg.eps_a = eps_a;
  cfg.kind = kind;
  cfg.pgd = AttackConfig::pgd(
      eps_a, 100, 0.1, AttackInit::Zero,
      kind == PoisonKind::Hypocritical ? AttackMode::Minimize : AttackMode::Maximize, clamp);
  cfg.crafting_eps_c = 0.25 * eps_a;
  cfg.crafting_epochs = 10;
  return cfg;
}

void CraftConfig::validate() const {
  if (!(eps_a >= 0.0) || !std::isfinite(eps_a)) throw_config("eps_a must be non-negative");
  if (!(crafting_eps_c >= 0.0)) throw_config("crafting_eps_c must be non-negative");
  if (crafting_epochs < 1) throw_config("crafting_epochs must be at least 1");
  if (pgd.eps != eps_a) throw_config("crafting PGD radius must equal eps_a");
  const AttackMode expected =
      kind == PoisonKind::Hypocritical ? AttackMode::Minimize : AttackMode::Maximize;
  if (pgd.mode != expected) throw_config("crafting PGD mode does not match the poison kind");
  pgd.validate();
}

TrainResult train_crafting_model(const Architecture& arch, const Dataset& ds,
                                 const CraftConfig& cfg, const TrainHyper& hyper) {
  cfg.validate();
  TrainHyper short_run = hyper;
  short_run.epochs = cfg.crafting_epochs;
  return train_pgd_at(arch, ds, short_run, cfg.crafting_eps_c,
                      at_inner_attack(cfg.crafting_eps_c, ds.bounded));
}

Dataset craft(const Dataset& ds, const Mlp& crafting_model, const CraftConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (crafting_model.input_dim() != ds.dim()) {
    throw_data(DataErrorKind::DimensionMismatch,
               "crafting model input size does not match the dataset");
  }
  if (cfg.eps_a == 0.0) return ds;

  AttackConfig attack = cfg.pgd;
  attack.clamp = ds.bounded;
  const auto labels = loss_labels(ds, crafting_model.default_loss());
  Rng rng(0, streams::kAttack);  // unused with a zero start

  Dataset out = ds;
  constexpr Eigen::Index kChunk = 512;
  for (Eigen::Index start = 0; start < ds.size(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, ds.size() - start);
    out.features.middleRows(start, count) =
        pgd_batch(crafting_model, ds.features.middleRows(start, count),
                  std::span<const int>(labels.data() + start, static_cast<std::size_t>(count)),
                  attack, rng);
  }
  std::ostringstream prov;
  prov << ds.provenance << ":poison=" << to_string(cfg.kind) << ":eps_a=" << cfg.eps_a
       << ":eps_c=" << cfg.crafting_eps_c;
  out.provenance = prov.str();
  out.validate();
  return out;
}

Dataset nonrobust_feature_dataset(const Dataset& ds, const Mlp& model, double eps, Rng& rng) {
  ds.validate();
  if (!(eps >= 0.0)) throw_domain("nonrobust_feature_dataset: eps must be non-negative");
  if (model.input_dim() != ds.dim()) {
    throw_data(DataErrorKind::DimensionMismatch, "model input size does not match the dataset");
  }
  Dataset out = ds;
  for (auto& label : out.labels) label = static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.num_classes)));

  if (eps > 0.0) {
    const AttackConfig attack =
        AttackConfig::pgd(eps, 100, 0.1, AttackInit::Zero, AttackMode::Minimize, ds.bounded);
    const auto targets = loss_labels(out, model.default_loss());
    constexpr Eigen::Index kChunk = 512;
    for (Eigen::Index start = 0; start < ds.size(); start += kChunk) {
      const Eigen::Index count = std::min(kChunk, ds.size() - start);
      out.features.middleRows(start, count) =
          pgd_batch(model, ds.features.middleRows(start, count),
                    std::span<const int>(targets.data() + start, static_cast<std::size_t>(count)),
                    attack, rng);
    }
  }
  std::ostringstream prov;
  prov << ds.provenance << ":nonrobust:eps=" << eps;
  out.provenance = prov.str();
  return out;
}

}  // namespace stablab
