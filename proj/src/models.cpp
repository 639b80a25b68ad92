#include "stablab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "binio.hpp"

namespace stablab {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw_domain("Mlp: need at least input and output sizes");
  for (int d : dims) {
    if (d < 1) throw_domain("Mlp: layer sizes must be positive");
  }
}

void check_input(const Mlp& model, Eigen::Index cols) {
  if (model.layers().empty()) throw_domain("Mlp: model has no layers");
  if (cols != model.input_dim()) {
    throw_data(DataErrorKind::DimensionMismatch,
               "input has " + std::to_string(cols) + " features, model expects " +
                   std::to_string(model.input_dim()));
  }
}

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void check_labels(const Mlp& model, std::span<const int> y, Eigen::Index rows, LossKind kind) {
  if (static_cast<Eigen::Index>(y.size()) != rows) {
    throw_data(DataErrorKind::DimensionMismatch, "label count does not match input rows");
  }
  if (kind == LossKind::Logistic) {
    if (model.output_dim() != 1) throw_domain("logistic loss needs a single-logit model");
    for (int v : y) {
      if (v != 1 && v != -1) throw_domain("logistic loss needs labels in {-1, +1}");
    }
  } else {
    for (int v : y) {
      if (v < 0 || v >= model.output_dim()) throw_domain("class label out of range");
    }
  }
}

/// Per-example losses and d loss_i / d logits_i.
void loss_and_dlogits(const Matrix& logits, std::span<const int> y, LossKind kind,
                      Vector& losses, Matrix* dlogits) {
  const Eigen::Index rows = logits.rows();
  losses.resize(rows);
  if (dlogits) dlogits->resize(rows, logits.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (kind == LossKind::Logistic) {
      const double margin = label * logits(i, 0);
      losses[i] = softplus(-margin);
      if (dlogits) (*dlogits)(i, 0) = -label * sigmoid(-margin);
    } else {
      const double top = logits.row(i).maxCoeff();
      const Eigen::RowVectorXd shifted = logits.row(i).array() - top;
      const double lse = std::log(shifted.array().exp().sum());
      losses[i] = lse - shifted[label];
      if (dlogits) {
        dlogits->row(i) = (shifted.array() - lse).exp().matrix();
        (*dlogits)(i, label) -= 1.0;
      }
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  check_dims(dims_);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back({Matrix::Zero(dims_[l + 1], dims_[l]), Vector::Zero(dims_[l + 1])});
  }
}

Eigen::Index Mlp::num_params() const {
  Eigen::Index total = 0;
  for (const auto& layer : layers_) total += layer.weight.size() + layer.bias.size();
  return total;
}

Vector Mlp::flat_params() const {
  Vector out(num_params());
  Eigen::Index at = 0;
  for (const auto& layer : layers_) {
    out.segment(at, layer.weight.size()) = layer.weight.reshaped();
    at += layer.weight.size();
    out.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return out;
}

void Mlp::set_flat_params(const Eigen::Ref<const Vector>& params) {
  if (params.size() != num_params()) throw_domain("set_flat_params: size mismatch");
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() = params.segment(at, layer.weight.size());
    at += layer.weight.size();
    layer.bias = params.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.dims_ == b.dims_ && serialize_model(a) == serialize_model(b);
}

Mlp init_mlp(std::vector<int> layer_dims, Rng& rng) {
  Mlp model(std::move(layer_dims));
  for (auto& layer : model.layers()) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.weight.cols()));
    // Row-major fill order so the draw sequence matches the file layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = stddev * rng.normal();
      }
    }
  }
  return model;
}

Mlp to_mlp(const LinearClassifier& f) {
  Mlp model({static_cast<int>(f.w.size()), 1});
  model.layers()[0].weight = f.w.transpose();
  model.layers()[0].bias[0] = f.b;
  return model;
}

LinearClassifier to_linear(const Mlp& model) {
  if (model.layers().size() != 1 || model.output_dim() != 1) {
    throw_domain("to_linear: model is not a single-logit linear classifier");
  }
  return {model.layers()[0].weight.row(0).transpose(), model.layers()[0].bias[0]};
}

Matrix forward(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs) {
  check_input(model, inputs.cols());
  Matrix act = inputs;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = act * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    act = (l + 1 < layers.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return act;
}

Vector forward_example(const Mlp& model, const Eigen::Ref<const Vector>& x) {
  const RowMatrix row = x.transpose();
  return forward(model, row).row(0).transpose();
}

std::vector<int> loss_labels(const Dataset& ds, LossKind kind) {
  if (kind == LossKind::SoftmaxCE) return ds.labels;
  if (ds.num_classes != 2) throw_domain("logistic loss needs a binary dataset");
  std::vector<int> out(ds.labels.size());
  std::transform(ds.labels.begin(), ds.labels.end(), out.begin(), signed_label);
  return out;
}

double loss(const Mlp& model, const Eigen::Ref<const Vector>& x, int y, LossKind kind) {
  const RowMatrix row = x.transpose();
  const int labels[1] = {y};
  return per_example_loss(model, row, labels, kind)[0];
}

Vector per_example_loss(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                        std::span<const int> y, LossKind kind) {
  check_input(model, inputs.cols());
  check_labels(model, y, inputs.rows(), kind);
  Vector losses;
  loss_and_dlogits(forward(model, inputs), y, kind, losses, nullptr);
  return losses;
}

std::vector<int> predict(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs) {
  const Matrix logits = forward(model, inputs);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (logits.cols() == 1) {
      out[static_cast<std::size_t>(i)] = logits(i, 0) > 0.0 ? 1 : 0;
    } else {
      Eigen::Index arg;
      logits.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
  }
  return out;
}

Gradients backprop(const Mlp& model, const Eigen::Ref<const RowMatrix>& inputs,
                   std::span<const int> y, LossKind kind, bool with_params) {
  check_input(model, inputs.cols());
  check_labels(model, y, inputs.rows(), kind);
  const auto& layers = model.layers();
  const std::size_t depth = layers.size();
  const double batch = static_cast<double>(inputs.rows());

  std::vector<Matrix> acts;  // acts[l] is the input to layer l
  std::vector<Matrix> pre;   // pre-activations of hidden layers
  acts.reserve(depth);
  acts.emplace_back(inputs);
  Matrix logits;
  for (std::size_t l = 0; l < depth; ++l) {
    Matrix z = acts.back() * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (l + 1 < depth) {
      acts.emplace_back(z.cwiseMax(0.0));
      pre.push_back(std::move(z));
    } else {
      logits = std::move(z);
    }
  }

  Gradients out;
  Matrix delta;
  loss_and_dlogits(logits, y, kind, out.losses, &delta);
  if (with_params) out.params.resize(depth);

  for (std::size_t l = depth; l-- > 0;) {
    if (with_params) {
      out.params[l].weight = delta.transpose() * acts[l] / batch;
      out.params[l].bias = delta.colwise().sum().transpose() / batch;
    }
    Matrix upstream = delta * layers[l].weight;
    if (l > 0) {
      delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    } else {
      out.input = upstream;
    }
  }
  return out;
}

ExampleGradients backprop_example(const Mlp& model, const Eigen::Ref<const Vector>& x, int y,
                                  LossKind kind) {
  const RowMatrix row = x.transpose();
  const int labels[1] = {y};
  Gradients g = backprop(model, row, labels, kind, true);
  Mlp shaped = model;
  shaped.layers() = std::move(g.params);
  return {shaped.flat_params(), g.input.row(0).transpose()};
}

std::vector<std::byte> serialize_model(const Mlp& model) {
  detail::ByteWriter w;
  w.magic("RSLM");
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers().size()));
  for (int d : model.layer_dims()) w.put<std::uint64_t>(static_cast<std::uint64_t>(d));
  for (const auto& layer : model.layers()) {
    const RowMatrix weight = layer.weight;
    w.put_doubles(weight.data(), static_cast<std::size_t>(weight.size()));
    w.put_doubles(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  return w.take();
}

Mlp deserialize_model(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic("RSLM")) throw_data(DataErrorKind::BadMagic, "not an RSLM model (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kModelFormatVersion) {
    throw_data(DataErrorKind::VersionMismatch,
               "unsupported RSLM version " + std::to_string(version));
  }
  const auto depth = r.get<std::uint32_t>("layer count");
  if (depth == 0 || depth > 64) throw_data(DataErrorKind::Invariant, "layer count out of range");
  std::vector<int> dims;
  std::uint64_t cells = 0;
  for (std::uint32_t i = 0; i <= depth; ++i) {
    const auto d = r.get<std::uint64_t>("layer sizes");
    if (d == 0 || d > (1u << 24)) throw_data(DataErrorKind::Invariant, "layer size out of range");
    if (!dims.empty()) cells += d * static_cast<std::uint64_t>(dims.back()) + d;
    dims.push_back(static_cast<int>(d));
  }
  if (cells * sizeof(double) != r.remaining()) {
    throw_data(cells * sizeof(double) > r.remaining() ? DataErrorKind::Truncated
                                                       : DataErrorKind::Invariant,
               "parameter block size does not match the declared shape");
  }
  Mlp model(dims);
  for (auto& layer : model.layers()) {
    RowMatrix weight(layer.weight.rows(), layer.weight.cols());
    r.get_doubles(weight.data(), static_cast<std::size_t>(weight.size()), "weights");
    layer.weight = weight;
    r.get_doubles(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()), "biases");
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw_data(DataErrorKind::Invariant, "model has non-finite parameters");
    }
  }
  return model;
}

void save_model(const Mlp& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

Mlp load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path));
}

std::uint64_t model_hash(const Mlp& model) { return fnv1a64(serialize_model(model)); }

}  // namespace stablab
