#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stablab/dataset.hpp"
#include "stablab/linear.hpp"
#include "stablab/numerics.hpp"

namespace stablab {

/// Logistic: L = log(1 + exp(-y f(x))) on a single logit, y in {-1, +1}.
/// SoftmaxCE: cross entropy over k logits, y in [0, k).
enum class LossKind { Logistic, SoftmaxCE };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Fully connected ReLU network. layer_dims = {input, hidden..., output};
/// a single-logit network with no hidden layer is a linear classifier.
class Mlp {
 public:
  Mlp() = default;
  /// All-zero parameters with the given shape.
  explicit Mlp(std::vector<int> layer_dims);

  const std::vector<int>& layer_dims() const noexcept { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  LossKind default_loss() const {
    return output_dim() == 1 ? LossKind::Logistic : LossKind::SoftmaxCE;
  }

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Eigen::Index num_params() const;
  Vector flat_params() const;
  void set_flat_params(const Eigen::Ref<const Vector>& params);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
};

/// He-style init: weights ~ N(0, 2 / fan_in), zero biases.
Mlp init_mlp(std::vector<int> layer_dims, Rng& rng);

Mlp to_mlp(const LinearClassifier& f);
/// Only for networks without hidden layers and a single logit.
LinearClassifier to_linear(const Mlp& model);

/// Logits, one row per input row.
Matrix forward(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs);
Vector forward_example(const Mlp& model, const Eigen::Ref<const Vector>& x);

/// Labels as the loss expects them: y in {-1, +1} for Logistic, the class
/// index for SoftmaxCE.
std::vector<int> loss_labels(const Dataset& ds, LossKind kind);

double loss(const Mlp& model, const Eigen::Ref<const Vector>& x, int y, LossKind kind);
Vector per_example_loss(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                        std::span<const int> y, LossKind kind);

/// Predicted class index (logit > 0 means class 1 for single-logit models).
std::vector<int> predict(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs);

struct Gradients {
  /// Gradient of the batch-mean loss, same shapes as Mlp::layers().
  std::vector<DenseLayer> params;
  /// Row i is d loss_i / d x_i (not divided by the batch size).
  RowMatrix input;
  Vector losses;
};

/// Exact gradients by reverse-mode differentiation. The ReLU derivative at 0
/// is taken as 0. Set with_params = false to skip parameter gradients.
Gradients backprop(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                   std::span<const int> y, LossKind kind, bool with_params = true);

struct ExampleGradients {
  Vector params;  // flattened in Mlp::flat_params order
  Vector input;
};
ExampleGradients backprop_example(const Mlp& model, const Eigen::Ref<const Vector>& x, int y,
                                  LossKind kind);

// RSLM container: "RSLM", u32 version, u32 layer count L, u64 dims[L + 1],
// then per layer f64 weights (row-major, out x in) and f64 biases.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::byte> serialize_model(const Mlp& model);
Mlp deserialize_model(std::span<const std::byte> bytes);
void save_model(const Mlp& model, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);
std::uint64_t model_hash(const Mlp& model);

}  // namespace stablab
