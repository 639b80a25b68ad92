#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stablab/numerics.hpp"

namespace stablab {

/// Labelled examples: one row of `features` per example, integer class labels
/// in [0, num_classes). Binary tasks use classes {0, 1}, read as y = -1 / +1.
struct Dataset {
  RowMatrix features;
  std::vector<int> labels;
  int num_classes = 2;
  /// When set every feature lies in [0, 1] and attacks clamp to that box.
  bool bounded = false;
  std::string provenance;

  Eigen::Index size() const noexcept { return features.rows(); }
  Eigen::Index dim() const noexcept { return features.cols(); }

  /// Throws a data error (kind Invariant) naming the first violation.
  void validate() const;

  friend bool operator==(const Dataset& a, const Dataset& b);
};

inline int signed_label(int cls) noexcept { return cls == 1 ? 1 : -1; }
inline int class_of_signed(int y) noexcept { return y > 0 ? 1 : 0; }

// RSLB container: "RSLB", u32 version, u64 n, u64 m, u32 k, u8 bounded,
// u32 provenance length + UTF-8 bytes, f64 features row-major, u32 labels.
// All integers and floats little-endian.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

std::vector<std::byte> serialize(const Dataset& ds);
Dataset deserialize(std::span<const std::byte> bytes);

void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

/// Fingerprint of the serialized form.
std::uint64_t dataset_hash(const Dataset& ds);

/// Read IDX image/label files (big-endian, magic 0x803 / 0x801). Keeps the
/// listed classes only, relabelled 0..classes.size()-1 in the given order,
/// and at most `limit` examples per class (0 = no limit). Pixels are /255.
Dataset import_idx(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path,
                   const std::vector<int>& classes, std::size_t limit);

/// Rows `indices` of `ds`, in order.
Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& indices);

/// Random disjoint partition; the first part gets floor(n * train_fraction)
/// rows. Both parts must be non-empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, Rng& rng);

struct MixSpec {
  double clean_fraction = 1.0;
  RngState seed{};
};

/// Keep floor(n * clean_fraction) randomly chosen rows clean and take the
/// poisoned version of every other row. Inputs must be row-aligned.
Dataset mix(const Dataset& clean, const Dataset& poisoned, const MixSpec& spec);

/// Features then label per line, header `f0,...,f{m-1},label`.
void export_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace stablab
