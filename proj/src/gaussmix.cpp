#include "stablab/gaussmix.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

namespace stablab {

void GaussMixSpec::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw_domain("GaussMixSpec: eta must lie in (0, 1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw_domain("GaussMixSpec: sigma must be positive");
  if (d < 1) throw_domain("GaussMixSpec: d must be at least 1");
  if (!(shift.eps >= 0.0) || !std::isfinite(shift.eps)) {
    throw_domain("GaussMixSpec: shift eps must be finite and non-negative");
  }
}

std::string GaussMixSpec::describe() const {
  std::ostringstream out;
  out << "gaussmix:";
  switch (shift.kind) {
    case ShiftKind::None: out << "none"; break;
    case ShiftKind::Adversarial: out << "adv:eps=" << shift.eps; break;
    case ShiftKind::Hypocritical: out << "hyp:eps=" << shift.eps; break;
  }
  out << ":eta=" << eta << ":sigma=" << sigma << ":d=" << d;
  return out.str();
}

bool is_moderate_adversarial_shift(const GaussMixSpec& spec) {
  return spec.shift.kind == ShiftKind::Adversarial && spec.shift.eps >= spec.eta / 2.0 &&
         spec.shift.eps < 0.5;
}

Vector per_class_mean(const GaussMixSpec& spec) {
  spec.validate();
  double offset = 0.0;
  if (spec.shift.kind == ShiftKind::Adversarial) offset = -spec.shift.eps;
  if (spec.shift.kind == ShiftKind::Hypocritical) offset = spec.shift.eps;
  Vector mu = Vector::Constant(spec.dim(), spec.eta + offset);
  mu[0] = 1.0 + offset;
  return mu;
}

Dataset sample(const GaussMixSpec& spec, Eigen::Index n, Rng& rng) {
  if (n < 1) throw_domain("sample: n must be at least 1");
  const Vector mu = per_class_mean(spec);
  Dataset ds;
  ds.features.resize(n, spec.dim());
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.below(2));
    const double y = signed_label(cls);
    ds.labels[static_cast<std::size_t>(i)] = cls;
    for (Eigen::Index j = 0; j < spec.dim(); ++j) {
      ds.features(i, j) = y * mu[j] + spec.sigma * rng.normal();
    }
  }
  ds.num_classes = 2;
  ds.bounded = false;
  ds.provenance = spec.describe();
  return ds;
}

Probability analytic_adv_risk_linear(const LinearClassifier& f, const GaussMixSpec& spec,
                                     double eps_d) {
  if (!(eps_d >= 0.0)) throw_domain("analytic_adv_risk_linear: eps_d must be non-negative");
  if (f.w.size() != spec.dim()) throw_domain("analytic_adv_risk_linear: dimension mismatch");
  const double l2 = f.w.norm();
  if (l2 == 0.0) throw_domain("analytic_adv_risk_linear: zero weight vector");
  const Vector mu = per_class_mean(spec);
  const double scale = spec.sigma * l2;
  const double base = eps_d * f.w.lpNorm<1>() - f.w.dot(mu);
  return Probability(0.5 * std_normal_cdf((base - f.b) / scale) +
                     0.5 * std_normal_cdf((base + f.b) / scale));
}

Probability prop1_nat_bound(double eta, double sigma, int d) {
  GaussMixSpec{eta, sigma, d, {}}.validate();
  const double s = static_cast<double>(d) * eta * eta;
  return std_normal_cdf((1.0 - s) / (sigma * std::sqrt(1.0 + s)));
}

Probability prop1_rob_exact(double eta, double sigma) {
  if (!(eta > 0.0 && eta < 1.0) || !(sigma > 0.0)) {
    throw_domain("prop1_rob_exact: need 0 < eta < 1 and sigma > 0");
  }
  return std_normal_cdf((1.0 - 2.0 * eta) / sigma);
}

double reduced_risk_argument(const GaussMixSpec& spec, double eps_d, double ratio) {
  const Vector mu = per_class_mean(spec);
  const double d = spec.d;
  const double l1 = 1.0 + d * std::abs(ratio);
  const double l2 = std::sqrt(1.0 + d * ratio * ratio);
  const double margin = mu[0] + d * ratio * mu[1];
  return (eps_d * l1 - margin) / (spec.sigma * l2);
}

LinearClassifier optimal_linear_robust(const GaussMixSpec& spec, double eps_d,
                                       const SearchConfig& grid) {
  spec.validate();
  if (!(eps_d >= 0.0)) throw_domain("optimal_linear_robust: eps_d must be non-negative");
  if (grid.grid_points < 3) throw_domain("optimal_linear_robust: need at least 3 grid points");
  const double lo = grid.ratio_lo;
  const double hi = grid.ratio_hi > 0.0 ? grid.ratio_hi : 2.0 * spec.eta;
  if (!(hi > lo)) throw_domain("optimal_linear_robust: empty ratio range");

  // Phi is monotone, so minimizing the risk is minimizing its argument.
  const auto objective = [&](double r) { return reduced_risk_argument(spec, eps_d, r); };

  const int points = grid.grid_points;
  const double step = (hi - lo) / (points - 1);
  int best_i = 0;
  double best_val = objective(lo);
  for (int i = 1; i < points; ++i) {
    const double v = objective(lo + step * i);
    if (v < best_val) {
      best_val = v;
      best_i = i;
    }
  }

  double a = lo + step * std::max(best_i - 1, 0);
  double b = lo + step * std::min(best_i + 1, points - 1);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double e = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fe = objective(e);
  while (b - a > grid.tol) {
    if (fc <= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + kInvPhi * (b - a);
      fe = objective(e);
    }
  }
  double best_r = 0.5 * (a + b);
  // The bracket endpoints matter when the optimum sits on the search boundary.
  for (double candidate : {a, b, lo + step * best_i}) {
    if (objective(candidate) < objective(best_r)) best_r = candidate;
  }

  LinearClassifier f;
  f.w = Vector::Constant(spec.dim(), best_r);
  f.w[0] = 1.0;
  f.b = 0.0;
  return f;
}

Probability monte_carlo_adv_risk(const LinearClassifier& f, const GaussMixSpec& spec,
                                 double eps_d, Eigen::Index n, Rng& rng) {
  if (n < 1) throw_domain("monte_carlo_adv_risk: n must be at least 1");
  if (!(eps_d >= 0.0)) throw_domain("monte_carlo_adv_risk: eps_d must be non-negative");
  if (f.w.size() != spec.dim()) throw_domain("monte_carlo_adv_risk: dimension mismatch");
  const Vector mu = per_class_mean(spec);
  // Zero-weight coordinates cannot move the logit; they are not drawn.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < f.w.size(); ++j) {
    if (f.w[j] != 0.0) active.push_back(j);
  }
  const double budget = eps_d * f.w.lpNorm<1>();

  // A fixed shard count keeps the estimate independent of the thread count:
  // shard k always owns the same slice of draws and its own stream.
  const Eigen::Index shards = std::min<Eigen::Index>(kMonteCarloShards, n);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(shards));
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<Eigen::Index> errors(static_cast<std::size_t>(shards), 0);
  const auto run_shard = [&](Eigen::Index k) {
    Rng local(seeds[static_cast<std::size_t>(k)], streams::kMonteCarlo);
    const Eigen::Index count = n / shards + (k < n % shards ? 1 : 0);
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < count; ++i) {
      const double y = local.below(2) == 1 ? 1.0 : -1.0;
      double logit = f.b;
      for (Eigen::Index j : active) {
        logit += f.w[j] * (y * mu[j] + spec.sigma * local.normal());
      }
      // Worst case delta = -eps y sign(w) lowers y * logit by eps ||w||_1.
      if (y * logit - budget <= 0.0) ++wrong;
    }
    errors[static_cast<std::size_t>(k)] = wrong;
  };

  const auto workers = std::min<Eigen::Index>(
      shards, std::max<Eigen::Index>(1, std::thread::hardware_concurrency()));
  if (workers == 1) {
    for (Eigen::Index k = 0; k < shards; ++k) run_shard(k);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::jthread> pool;
    for (Eigen::Index t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (Eigen::Index k; (k = next++) < shards;) run_shard(k);
      });
    }
  }
  Eigen::Index total = 0;
  for (Eigen::Index e : errors) total += e;
  return Probability(static_cast<double>(total) / static_cast<double>(n));
}

}  // namespace stablab
