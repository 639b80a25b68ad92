#pragma once

#include "stablab/numerics.hpp"

namespace stablab {

/// sign(w.x + b). Shared between the analytic mixture results and the model
/// zoo, where it converts to a single-layer Mlp.
struct LinearClassifier {
  Vector w;
  double b = 0.0;

  double logit(const Eigen::Ref<const Vector>& x) const { return w.dot(x) + b; }
};

/// w_nat = [1, eta, ..., eta] (length d + 1).
inline LinearClassifier natural_classifier(double eta, int d) {
  Vector w = Vector::Constant(d + 1, eta);
  w[0] = 1.0;
  return {w, 0.0};
}

/// w_rob = [1, 0, ..., 0] (length d + 1).
inline LinearClassifier robust_classifier(int d) {
  Vector w = Vector::Zero(d + 1);
  w[0] = 1.0;
  return {w, 0.0};
}

/// Mean of w_i / w_1 over the non-robust coordinates i >= 2.
inline double nonrobust_ratio(const LinearClassifier& f) {
  if (f.w.size() < 2 || f.w[0] == 0.0) throw_domain("nonrobust_ratio: need w_1 != 0 and d >= 1");
  return f.w.tail(f.w.size() - 1).mean() / f.w[0];
}

}  // namespace stablab
