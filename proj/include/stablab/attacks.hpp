#pragma once

#include <span>

#include "stablab/linear.hpp"
#include "stablab/models.hpp"

namespace stablab {

enum class AttackInit { Zero, UniformRandom };
/// Maximize raises the loss (test-time attack, adversarial poison); Minimize
/// lowers it (hypocritical poison).
enum class AttackMode { Maximize, Minimize };

/// Signed-gradient l_inf attack inside {delta : ||delta||_inf <= eps}.
struct AttackConfig {
  double eps = 0.0;
  int steps = 1;
  double step_size = 0.0;
  AttackInit init = AttackInit::Zero;
  AttackMode mode = AttackMode::Maximize;
  /// Keep iterates inside [0, 1]^m (set for bounded datasets).
  bool clamp = false;

  void validate() const;

  /// `steps` steps of size eps * step_ratio.
  static AttackConfig pgd(double eps, int steps, double step_ratio, AttackInit init,
                          AttackMode mode, bool clamp) {
    return {eps, steps, eps * step_ratio, init, mode, clamp};
  }
};

/// x' = x +/- eps sign(grad_x L), then the optional [0, 1] clamp.
Vector fgsm(const Mlp& model, const Eigen::Ref<const Vector>& x, int y, double eps,
            AttackMode mode, bool clamp);
RowMatrix fgsm_batch(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                     std::span<const int> y, double eps, AttackMode mode, bool clamp);

/// Projected signed-gradient iterations. Returns, per row, the iterate with
/// the most extreme loss seen, the clean input included, so Maximize never
/// lowers and Minimize never raises the loss. Labels follow the model's
/// default loss (see loss_labels). `rng` is used only for random init.
RowMatrix pgd_batch(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                    std::span<const int> y, const AttackConfig& cfg, Rng& rng);
Vector pgd(const Mlp& model, const Eigen::Ref<const Vector>& x, int y,
           const AttackConfig& cfg, Rng& rng);

/// Exact l_inf optimum of the logistic loss for a linear model:
/// x - eps y sign(w) (Maximize) or x + eps y sign(w) (Minimize). y in {-1, +1}.
template <typename Derived>
Vector linear_worst_case(const LinearClassifier& f, const Eigen::MatrixBase<Derived>& x, int y,
                         double eps, AttackMode mode) {
  if (!(eps >= 0.0)) throw_domain("linear_worst_case: eps must be non-negative");
  const double direction = (mode == AttackMode::Maximize ? -1.0 : 1.0) * y;
  return x + (eps * direction) * f.w.array().sign().matrix();
}

/// Logistic loss after the exact worst-case perturbation of radius eps:
/// log(1 + exp(-(y (w.x + b) - eps ||w||_1))).
double linear_robust_loss(const LinearClassifier& f, const Eigen::Ref<const Vector>& x, int y,
                          double eps);

}  // namespace stablab
