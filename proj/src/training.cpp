#include "stablab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "stablab/eval.hpp"

namespace stablab {

std::vector<int> Architecture::layer_dims(const Dataset& ds) const {
  std::vector<int> dims{static_cast<int>(ds.dim())};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(ds.num_classes == 2 ? 1 : ds.num_classes);
  return dims;
}

void TrainHyper::validate() const {
  if (epochs < 0) throw_config("epochs must be non-negative");
  if (batch_size < 1) throw_config("batch_size must be positive");
  if (!(lr > 0.0)) throw_config("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw_config("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw_config("weight_decay must be non-negative");
  if (warmup_epochs < 0) throw_config("warmup_epochs must be non-negative");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw_config("holdout_fraction must lie in [0, 1)");
  }
  for (const auto& drop : lr_drops) {
    if (drop.epoch < 0 || !(drop.factor > 0.0)) throw_config("invalid lr drop");
  }
}

double TrainHyper::lr_at(int epoch) const {
  double rate = lr;
  for (const auto& drop : lr_drops) {
    if (epoch >= drop.epoch) rate *= drop.factor;
  }
  return rate;
}

void BudgetSet::validate() const {
  if (!(eps_a >= 0.0 && eps_c >= 0.0 && eps_d >= 0.0)) {
    throw_config("budgets must be non-negative");
  }
}

AttackConfig at_inner_attack(double eps_d, bool clamp) {
  return AttackConfig::pgd(eps_d, 10, 0.25, AttackInit::UniformRandom, AttackMode::Maximize,
                           clamp);
}

AttackConfig early_stop_attack(double eps_d, bool clamp) { return at_inner_attack(eps_d, clamp); }

namespace {

struct Velocity {
  std::vector<DenseLayer> layers;
};

TrainResult run_training(const Architecture& arch, const Dataset& ds, const TrainHyper& hyper,
                         double eps_d, const AttackConfig* inner) {
  hyper.validate();
  ds.validate();
  if (!(eps_d >= 0.0)) throw_config("eps_d must be non-negative");

  Dataset train = ds;
  std::optional<Dataset> holdout;
  const auto n_holdout =
      static_cast<Eigen::Index>(std::floor(static_cast<double>(ds.size()) * hyper.holdout_fraction));
  if (n_holdout >= 1 && n_holdout < ds.size()) {
    Rng split_rng(hyper.seed, streams::kSplit);
    auto parts = split(ds, 1.0 - static_cast<double>(n_holdout) / static_cast<double>(ds.size()),
                       split_rng);
    train = std::move(parts.first);
    holdout = std::move(parts.second);
  }

  Rng init_rng(hyper.seed, streams::kInit);
  Rng shuffle_rng(hyper.seed, streams::kShuffle);
  Rng attack_rng(hyper.seed, streams::kAttack);

  TrainResult result;
  result.model = init_mlp(arch.layer_dims(ds), init_rng);
  if (hyper.epochs == 0) return result;

  const LossKind kind = result.model.default_loss();
  const std::vector<int> labels = loss_labels(train, kind);
  const bool adversarial = inner != nullptr && eps_d > 0.0;
  AttackConfig attack_cfg;
  if (adversarial) {
    attack_cfg = *inner;
    attack_cfg.eps = eps_d;
    attack_cfg.mode = AttackMode::Maximize;
    attack_cfg.validate();
  }

  Mlp model = result.model;
  Velocity velocity;
  for (const auto& layer : model.layers()) {
    velocity.layers.push_back(
        {Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
  }

  const Eigen::Index n = train.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  RowMatrix batch_x;
  std::vector<int> batch_y;
  double best_metric = -1.0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    const double rate = hyper.lr_at(epoch);
    double loss_sum = 0.0;
    if (adversarial) {
      const double ramp =
          epoch < hyper.warmup_epochs ? static_cast<double>(epoch + 1) / (hyper.warmup_epochs + 1) : 1.0;
      attack_cfg.eps = eps_d * ramp;
      attack_cfg.step_size = inner->step_size * ramp;
    }

    for (Eigen::Index start = 0; start < n; start += hyper.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(hyper.batch_size, n - start);
      batch_x.resize(count, train.dim());
      batch_y.resize(static_cast<std::size_t>(count));
      for (Eigen::Index r = 0; r < count; ++r) {
        const auto src = order[static_cast<std::size_t>(start + r)];
        batch_x.row(r) = train.features.row(src);
        batch_y[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(src)];
      }
      if (adversarial) batch_x = pgd_batch(model, batch_x, batch_y, attack_cfg, attack_rng);

      const Gradients g = backprop(model, batch_x, batch_y, kind, true);
      const double batch_loss = g.losses.mean();
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged(epoch, "training diverged: non-finite loss in epoch " +
                                          std::to_string(epoch));
      }
      loss_sum += g.losses.sum();

      for (std::size_t l = 0; l < model.layers().size(); ++l) {
        auto& layer = model.layers()[l];
        auto& vel = velocity.layers[l];
        vel.weight = hyper.momentum * vel.weight + g.params[l].weight +
                     hyper.weight_decay * layer.weight;
        vel.bias = hyper.momentum * vel.bias + g.params[l].bias + hyper.weight_decay * layer.bias;
        layer.weight -= rate * vel.weight;
        layer.bias -= rate * vel.bias;
      }
    }
    for (const auto& layer : model.layers()) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        throw TrainingDiverged(epoch, "training diverged: non-finite parameters in epoch " +
                                          std::to_string(epoch));
      }
    }

    EpochLog entry{epoch, rate, loss_sum / static_cast<double>(n)};
    if (holdout) {
      if (adversarial) {
        Rng eval_rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(epoch)), streams::kAttack);
        entry.holdout_metric =
            robust_accuracy(model, *holdout, early_stop_attack(eps_d, attack_cfg.clamp), eval_rng);
      } else {
        entry.holdout_metric = accuracy(model, *holdout);
      }
      if (entry.holdout_metric > best_metric) {
        best_metric = entry.holdout_metric;
        result.model = model;
        result.best_epoch = epoch;
        result.holdout_metric = entry.holdout_metric;
      }
    } else {
      result.model = model;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace

TrainResult train_natural(const Architecture& arch, const Dataset& ds, const TrainHyper& hyper) {
  return run_training(arch, ds, hyper, 0.0, nullptr);
}

TrainResult train_pgd_at(const Architecture& arch, const Dataset& ds, const TrainHyper& hyper,
                         double eps_d, const AttackConfig& inner) {
  if (inner.mode != AttackMode::Maximize) throw_config("adversarial training needs a Maximize attack");
  return run_training(arch, ds, hyper, eps_d, &inner);
}

namespace {

struct RobustLogistic {
  const RowMatrix& x;
  Vector y;  // +-1
  double eps;
  double l2;

  // Parameters packed as [u (m), v (m), b].
  double value_and_grad(const Vector& theta, Vector* grad) const {
    const Eigen::Index m = x.cols();
    const double n = static_cast<double>(x.rows());
    const Vector w = theta.head(m) - theta.segment(m, m);
    const double b = theta[2 * m];
    const double l1 = theta.head(2 * m).sum();
    const Vector margin = (y.array() * ((x * w).array() + b)).matrix() - Vector::Constant(y.size(), eps * l1);
    double value = 0.0;
    Vector slope(margin.size());  // d loss / d margin
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double mi = margin[i];
      value += std::max(-mi, 0.0) + std::log1p(std::exp(-std::abs(mi)));
      slope[i] = mi >= 0.0 ? -std::exp(-mi) / (1.0 + std::exp(-mi)) : -1.0 / (1.0 + std::exp(mi));
    }
    value /= n;
    value += 0.5 * l2 * theta.head(2 * m).squaredNorm();
    if (grad) {
      const Vector sy = slope.cwiseProduct(y);
      const Vector xs = x.transpose() * sy / n;
      const double mean_slope = slope.sum() / n;
      grad->resize(theta.size());
      grad->head(m) = xs.array() - eps * mean_slope;
      grad->segment(m, m) = -xs.array() - eps * mean_slope;
      grad->head(2 * m) += l2 * theta.head(2 * m);
      (*grad)[2 * m] = sy.sum() / n;
    }
    return value;
  }

  void project(Vector& theta) const {
    const Eigen::Index m = x.cols();
    theta.head(2 * m) = theta.head(2 * m).cwiseMax(0.0);
  }
};

}  // namespace

LinearClassifier train_linear_robust_exact(const Dataset& ds, double eps_d,
                                           const LinearFitOptions& options) {
  ds.validate();
  if (ds.num_classes != 2) throw_domain("train_linear_robust_exact: binary labels required");
  if (!(eps_d >= 0.0)) throw_config("eps_d must be non-negative");
  if (options.max_iters < 1) throw_config("max_iters must be positive");

  RobustLogistic problem{ds.features, Vector(ds.size()), eps_d, options.l2};
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    problem.y[i] = signed_label(ds.labels[static_cast<std::size_t>(i)]);
  }
  const Eigen::Index m = ds.dim();

  // FISTA with backtracking and a monotone restart.
  Vector theta = Vector::Zero(2 * m + 1);
  Vector momentum_point = theta;
  double t = 1.0;
  double step = 1.0;
  Vector grad;
  double current = problem.value_and_grad(theta, nullptr);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const double base = problem.value_and_grad(momentum_point, &grad);
    Vector next;
    double next_value;
    while (true) {
      next = momentum_point - step * grad;
      problem.project(next);
      next_value = problem.value_and_grad(next, nullptr);
      const Vector diff = next - momentum_point;
      if (next_value <= base + grad.dot(diff) + diff.squaredNorm() / (2.0 * step)) break;
      step *= 0.5;
      if (step < 1e-20) break;
    }
    if (!std::isfinite(next_value)) {
      throw TrainingDiverged(iter, "train_linear_robust_exact: non-finite objective");
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (next_value > current) {
      // Restart acceleration when the objective goes up.
      momentum_point = theta;
      t = 1.0;
      continue;
    }
    momentum_point = next + ((t - 1.0) / t_next) * (next - theta);
    const double decrease = current - next_value;
    theta = std::move(next);
    t = t_next;
    const bool converged = decrease <= options.tol * std::max(1.0, std::abs(current));
    current = next_value;
    step *= 1.25;
    if (converged && iter > 10) break;
  }

  LinearClassifier f;
  f.w = theta.head(m) - theta.segment(m, m);
  f.b = theta[2 * m];
  return f;
}

LinearClassifier train_linear_robust_exact(const GaussMixSpec& spec, Eigen::Index n,
                                           std::uint64_t seed, double eps_d,
                                           const LinearFitOptions& options) {
  Rng rng(seed, streams::kData);
  return train_linear_robust_exact(sample(spec, n, rng), eps_d, options);
}

}  // namespace stablab
