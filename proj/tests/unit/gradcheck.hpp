#pragma once

// Backprop-vs-central-difference sweep shared by the unit and acceptance
// suites.

#include <algorithm>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stablab/models.hpp"
#include "stablab/numerics.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  int points = 0;
  int skipped_near_kink = 0;
};

/// Smallest |pre-activation| over hidden units; central differences are only
/// a valid oracle away from ReLU kinks.
inline double kink_distance(const stablab::Mlp& model, const stablab::Vector& x) {
  double nearest = std::numeric_limits<double>::infinity();
  stablab::Vector a = x;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const stablab::Vector z = layers[l].weight * a + layers[l].bias;
    nearest = std::min(nearest, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  return nearest;
}

/// Runs `points` random (model, x, y) draws for one architecture and loss and
/// returns the worst relative error over parameter and input gradients.
inline Result run(const std::vector<int>& dims, stablab::LossKind kind, int points,
                  std::uint64_t seed, double h = 1e-5, double kink_margin = 1e-3) {
  using namespace stablab;
  Result out;
  Rng rng(seed, streams::kMonteCarlo);
  while (out.points < points) {
    Mlp model = init_mlp(dims, rng);
    for (auto& layer : model.layers()) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
    }
    Vector x(dims.front());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
    const int k = dims.back();
    const int y = kind == LossKind::Logistic ? (rng.below(2) ? 1 : -1)
                                             : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    if (kink_distance(model, x) < kink_margin) {
      ++out.skipped_near_kink;
      continue;
    }
    const ExampleGradients g = backprop_example(model, x, y, kind);
    const Vector theta = model.flat_params();
    Mlp probe = model;
    const Vector fd_params = finite_diff_grad(
        [&](const Vector& p) {
          probe.set_flat_params(p);
          return loss(probe, x, y, kind);
        },
        theta, h);
    const Vector fd_input =
        finite_diff_grad([&](const Vector& v) { return loss(model, v, y, kind); }, x, h);
    out.max_rel_error = std::max({out.max_rel_error, oracle::relative_error(g.params, fd_params),
                                  oracle::relative_error(g.input, fd_input)});
    ++out.points;
  }
  return out;
}

}  // namespace gradcheck
