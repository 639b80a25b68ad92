#include "stablab/attacks.hpp"

#include <cmath>
#include <iostream>
#include <string>

namespace stablab {

void AttackConfig::validate() const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw_domain("AttackConfig: eps must be non-negative");
  if (steps < 1) throw_domain("AttackConfig: steps must be at least 1");
  if (eps > 0.0 && !(step_size > 0.0)) throw_domain("AttackConfig: step_size must be positive");
}

namespace {

void clamp_unit(RowMatrix& x) { x = x.cwiseMax(0.0).cwiseMin(1.0); }

double mode_sign(AttackMode mode) { return mode == AttackMode::Maximize ? 1.0 : -1.0; }

}  // namespace

RowMatrix fgsm_batch(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                     std::span<const int> y, double eps, AttackMode mode, bool clamp) {
  if (!(eps >= 0.0)) throw_domain("fgsm: eps must be non-negative");
  const Gradients g = backprop(model, inputs, y, model.default_loss(), false);
  RowMatrix out = inputs + (eps * mode_sign(mode)) * g.input.array().sign().matrix();
  if (clamp) clamp_unit(out);
  return out;
}

Vector fgsm(const Mlp& model, const Eigen::Ref<const Vector>& x, int y, double eps,
            AttackMode mode, bool clamp) {
  const RowMatrix row = x.transpose();
  const int labels[1] = {y};
  return fgsm_batch(model, row, labels, eps, mode, clamp).row(0).transpose();
}

RowMatrix pgd_batch(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                    std::span<const int> y, const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  const LossKind kind = model.default_loss();
  if (cfg.eps == 0.0) {
    per_example_loss(model, inputs, y, kind);  // shape and label checks
    return inputs;
  }
  if (cfg.step_size > 2.0 * cfg.eps) {
    std::cerr << "warning: PGD step size " << cfg.step_size << " exceeds twice the budget "
              << cfg.eps << '\n';
  }
  const double sign = mode_sign(cfg.mode);
  // Score to maximize: the loss for Maximize, its negative for Minimize.
  RowMatrix best = inputs;
  Vector best_score = sign * per_example_loss(model, inputs, y, kind);

  RowMatrix delta = RowMatrix::Zero(inputs.rows(), inputs.cols());
  if (cfg.init == AttackInit::UniformRandom) {
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
      for (Eigen::Index c = 0; c < delta.cols(); ++c) delta(r, c) = rng.uniform(-cfg.eps, cfg.eps);
    }
  }
  RowMatrix current = inputs + delta;
  if (cfg.clamp) {
    clamp_unit(current);
    delta = current - inputs;
  }

  const auto keep_best = [&](const RowMatrix& candidate, const Vector& score) {
    for (Eigen::Index i = 0; i < candidate.rows(); ++i) {
      if (score[i] > best_score[i]) {
        best_score[i] = score[i];
        best.row(i) = candidate.row(i);
      }
    }
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const Gradients g = backprop(model, current, y, kind, false);
    if (step > 0 || cfg.init == AttackInit::UniformRandom) keep_best(current, sign * g.losses);
    delta += (cfg.step_size * sign) * g.input.array().sign().matrix();
    delta = delta.cwiseMax(-cfg.eps).cwiseMin(cfg.eps);
    current = inputs + delta;
    if (cfg.clamp) {
      clamp_unit(current);
      delta = current - inputs;
    }
  }
  keep_best(current, sign * per_example_loss(model, current, y, kind));
  return best;
}

Vector pgd(const Mlp& model, const Eigen::Ref<const Vector>& x, int y,
           const AttackConfig& cfg, Rng& rng) {
  const RowMatrix row = x.transpose();
  const int labels[1] = {y};
  return pgd_batch(model, row, labels, cfg, rng).row(0).transpose();
}

double linear_robust_loss(const LinearClassifier& f, const Eigen::Ref<const Vector>& x, int y,
                          double eps) {
  const double margin = y * f.logit(x) - eps * f.w.lpNorm<1>();
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

}  // namespace stablab
