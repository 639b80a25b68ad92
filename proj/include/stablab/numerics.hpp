#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>

#include "stablab/errors.hpp"

namespace stablab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Example-major feature storage: row i is example i.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A value in [0, 1]. Constructing from anything outside that range is a
/// domain error.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

/// Origin of a pseudorandom sequence. Equal states give equal sequences.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngState&, const RngState&) = default;
};

/// Named stream identifiers so independent consumers never share draws.
namespace streams {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kAttack = 4;
inline constexpr std::uint64_t kSplit = 5;
inline constexpr std::uint64_t kMix = 6;
inline constexpr std::uint64_t kTarget = 7;
inline constexpr std::uint64_t kMonteCarlo = 8;
}  // namespace streams

std::uint64_t splitmix64(std::uint64_t& state);

/// Child seed for the `index`-th independent job under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// xoshiro256** seeded through splitmix64 from (seed, stream). Gaussian draws
/// use Box-Muller and cache the second variate of each pair.
class Rng {
 public:
  explicit Rng(RngState state);
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngState{seed, stream}) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

  const RngState& origin() const noexcept { return origin_; }

 private:
  RngState origin_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draw from N(mean, sigma^2). sigma must be positive.
double sample_gaussian(double mean, double sigma, Rng& rng);

/// Standard normal CDF. Non-finite input is a domain error.
Probability std_normal_cdf(double z);

/// Central-difference gradient of a scalar function.
template <typename F, typename Derived>
Vector finite_diff_grad(F&& f, const Eigen::MatrixBase<Derived>& x, double h) {
  if (!(h > 0.0)) throw_domain("finite_diff_grad: step must be positive");
  Vector probe = x;
  Vector grad(probe.size());
  for (Eigen::Index i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// FNV-1a over raw bytes; used for artifact fingerprints.
std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace stablab
