#include "stablab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "binio.hpp"

namespace stablab {

void Dataset::validate() const {
  const auto invariant = [](const std::string& what) {
    throw_data(DataErrorKind::Invariant, "dataset invariant violated: " + what);
  };
  if (features.rows() < 1) invariant("dataset has no examples");
  if (features.cols() < 1) invariant("dataset has no features");
  if (num_classes < 1) invariant("num_classes must be positive");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    invariant("label count " + std::to_string(labels.size()) + " != row count " +
              std::to_string(features.rows()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      invariant("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const double v = features(r, c);
      if (!std::isfinite(v)) {
        invariant("non-finite feature at row " + std::to_string(r) + ", column " +
                  std::to_string(c));
      }
      if (bounded && (v < 0.0 || v > 1.0)) {
        invariant("bounded dataset has feature " + std::to_string(v) + " at row " +
                  std::to_string(r) + ", column " + std::to_string(c));
      }
    }
  }
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.num_classes != b.num_classes || a.bounded != b.bounded ||
      a.provenance != b.provenance || a.labels != b.labels ||
      a.features.rows() != b.features.rows() || a.features.cols() != b.features.cols()) {
    return false;
  }
  return std::memcmp(a.features.data(), b.features.data(),
                     static_cast<std::size_t>(a.features.size()) * sizeof(double)) == 0;
}

std::vector<std::byte> serialize(const Dataset& ds) {
  detail::ByteWriter w;
  w.magic("RSLB");
  w.put<std::uint32_t>(kDatasetFormatVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ds.size()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ds.dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.num_classes));
  w.put<std::uint8_t>(ds.bounded ? 1 : 0);
  w.put_string(ds.provenance);
  w.put_doubles(ds.features.data(), static_cast<std::size_t>(ds.features.size()));
  for (int label : ds.labels) w.put<std::uint32_t>(static_cast<std::uint32_t>(label));
  return w.take();
}

Dataset deserialize(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic("RSLB")) throw_data(DataErrorKind::BadMagic, "not an RSLB dataset (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kDatasetFormatVersion) {
    throw_data(DataErrorKind::VersionMismatch,
               "unsupported RSLB version " + std::to_string(version));
  }
  const auto n = r.get<std::uint64_t>("row count");
  const auto m = r.get<std::uint64_t>("column count");
  const auto k = r.get<std::uint32_t>("class count");
  const auto bounded = r.get<std::uint8_t>("bounded flag");
  Dataset ds;
  ds.provenance = r.get_string("provenance");

  if (bounded > 1) throw_data(DataErrorKind::Invariant, "bounded flag must be 0 or 1");
  if (k == 0 || k > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw_data(DataErrorKind::Invariant, "class count out of range");
  }
  // Payload size check before allocating anything proportional to n * m.
  const std::uint64_t max_cells = r.remaining() / sizeof(double);
  if (m != 0 && n > max_cells / m) {
    throw_data(DataErrorKind::Truncated, "payload shorter than the declared shape");
  }
  const std::uint64_t expected = n * m * sizeof(double) + n * sizeof(std::uint32_t);
  if (r.remaining() < expected) {
    throw_data(DataErrorKind::Truncated, "payload shorter than the declared shape");
  }
  if (r.remaining() > expected) {
    throw_data(DataErrorKind::Invariant, "trailing bytes after the label block");
  }

  ds.num_classes = static_cast<int>(k);
  ds.bounded = bounded == 1;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  r.get_doubles(ds.features.data(), static_cast<std::size_t>(n * m), "features");
  ds.labels.resize(static_cast<std::size_t>(n));
  for (auto& label : ds.labels) {
    const auto raw = r.get<std::uint32_t>("labels");
    if (raw >= k) {
      throw_data(DataErrorKind::Invariant, "label " + std::to_string(raw) + " out of range");
    }
    label = static_cast<int>(raw);
  }
  ds.validate();
  return ds;
}

void save(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  detail::write_file(path, serialize(ds));
}

Dataset load(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path));
}

std::uint64_t dataset_hash(const Dataset& ds) {
  return fnv1a64(serialize(ds));
}

namespace {

std::uint32_t read_be32(std::span<const std::byte> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<std::uint32_t>(bytes[offset + i]);
  }
  return v;
}

}  // namespace

Dataset import_idx(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path,
                   const std::vector<int>& classes, std::size_t limit) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);
  if (images.size() < 16 || read_be32(images, 0) != 0x00000803) {
    throw_data(DataErrorKind::BadMagic, "IDX image file must start with magic 0x00000803");
  }
  if (labels.size() < 8 || read_be32(labels, 0) != 0x00000801) {
    throw_data(DataErrorKind::BadMagic, "IDX label file must start with magic 0x00000801");
  }
  const std::size_t count = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  const std::size_t pixels = rows * cols;
  if (read_be32(labels, 4) != count) {
    throw_data(DataErrorKind::DimensionMismatch, "IDX image and label counts differ");
  }
  if (pixels == 0 || images.size() != 16 + count * pixels || labels.size() != 8 + count) {
    throw_data(DataErrorKind::DimensionMismatch, "IDX payload size does not match header");
  }
  if (classes.empty()) throw_data(DataErrorKind::UnknownClass, "no classes requested");

  std::vector<std::size_t> taken(classes.size(), 0);
  std::vector<std::size_t> picked;
  std::vector<int> picked_label;
  for (std::size_t i = 0; i < count; ++i) {
    const int raw = static_cast<int>(labels[8 + i]);
    const auto it = std::find(classes.begin(), classes.end(), raw);
    if (it == classes.end()) continue;
    const auto slot = static_cast<std::size_t>(it - classes.begin());
    if (limit != 0 && taken[slot] >= limit) continue;
    ++taken[slot];
    picked.push_back(i);
    picked_label.push_back(static_cast<int>(slot));
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (taken[c] == 0) {
      throw_data(DataErrorKind::UnknownClass,
                 "class " + std::to_string(classes[c]) + " has no examples in " +
                     labels_path.string());
    }
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(picked.size()), static_cast<Eigen::Index>(pixels));
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const std::byte* src = images.data() + 16 + picked[r] * pixels;
    for (std::size_t c = 0; c < pixels; ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<double>(static_cast<unsigned>(src[c])) / 255.0;
    }
  }
  ds.labels = std::move(picked_label);
  ds.num_classes = static_cast<int>(classes.size());
  ds.bounded = true;
  std::ostringstream prov;
  prov << "idx:" << images_path.filename().string() << ":classes=";
  for (std::size_t c = 0; c < classes.size(); ++c) prov << (c ? "," : "") << classes[c];
  prov << ":limit=" << limit;
  ds.provenance = prov.str();
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& indices) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), ds.dim());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(indices[r]);
    out.labels.push_back(ds.labels[static_cast<std::size_t>(indices[r])]);
  }
  out.num_classes = ds.num_classes;
  out.bounded = ds.bounded;
  out.provenance = ds.provenance;
  return out;
}

namespace {

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Fisher-Yates on the pinned generator (std::shuffle is not portable).
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw_domain("split: train_fraction must lie in (0, 1)");
  }
  const auto n = ds.size();
  const auto n_train = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train < 1 || n_train >= n) {
    throw_domain("split: both parts must be non-empty");
  }
  auto idx = shuffled_indices(n, rng);
  std::vector<Eigen::Index> first(idx.begin(), idx.begin() + n_train);
  std::vector<Eigen::Index> second(idx.begin() + n_train, idx.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {subset(ds, first), subset(ds, second)};
}

Dataset mix(const Dataset& clean, const Dataset& poisoned, const MixSpec& spec) {
  if (!(spec.clean_fraction >= 0.0 && spec.clean_fraction <= 1.0)) {
    throw_domain("mix: clean_fraction must lie in [0, 1]");
  }
  if (clean.size() != poisoned.size() || clean.dim() != poisoned.dim() ||
      clean.labels != poisoned.labels || clean.num_classes != poisoned.num_classes) {
    throw_data(DataErrorKind::Alignment,
               "mix: clean and poisoned datasets are not example-aligned");
  }
  const auto n = clean.size();
  const auto n_clean =
      static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * spec.clean_fraction));
  Rng rng(spec.seed);
  const auto idx = shuffled_indices(n, rng);

  if (n_clean == n) return clean;
  if (n_clean == 0) return poisoned;

  Dataset out = poisoned;
  for (Eigen::Index i = 0; i < n_clean; ++i) {
    const auto row = idx[static_cast<std::size_t>(i)];
    out.features.row(row) = clean.features.row(row);
  }
  std::ostringstream prov;
  prov << poisoned.provenance << ":mixed:clean_fraction=" << spec.clean_fraction;
  out.provenance = prov.str();
  out.bounded = clean.bounded && poisoned.bounded;
  return out;
}

void export_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw_data(DataErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (Eigen::Index c = 0; c < ds.dim(); ++c) out << 'f' << c << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) out << ds.features(r, c) << ',';
    out << ds.labels[static_cast<std::size_t>(r)] << '\n';
  }
}

}  // namespace stablab
