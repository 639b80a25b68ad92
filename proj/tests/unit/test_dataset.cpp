#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "stablab/dataset.hpp"
#include "stablab/errors.hpp"

using namespace stablab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() /
                   ("stablab_ds_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
  fs::create_directories(dir);
  return dir;
}

Dataset small(bool bounded = false) {
  Dataset ds;
  ds.features.resize(3, 2);
  ds.features << 0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0;
  ds.labels = {0, 1, 1};
  ds.bounded = bounded;
  ds.provenance = "unit:small";
  return ds;
}

Dataset ramp(Eigen::Index n, Eigen::Index m, int k = 2) {
  Dataset ds;
  ds.features.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) ds.features(i, j) = double(i * m + j) / double(n * m);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ds.labels[i] = int(i % k);
  ds.num_classes = k;
  ds.bounded = true;
  ds.provenance = "unit:ramp";
  return ds;
}

DataErrorKind load_kind(std::span<const std::byte> bytes) {
  try {
    deserialize(bytes);
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Data);
    return e.data_kind();
  }
  return DataErrorKind::None;
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

// Writes a synthetic IDX pair: image i has every pixel equal to (i * 37) % 256,
// except pixel 0 which is 255; labels cycle through `label_cycle`.
void write_idx(const fs::path& images, const fs::path& labels, std::uint32_t count,
               std::uint32_t rows, std::uint32_t cols, const std::vector<int>& label_cycle,
               std::uint32_t image_magic = 0x803) {
  std::vector<unsigned char> img, lab;
  put_be32(img, image_magic);
  put_be32(img, count);
  put_be32(img, rows);
  put_be32(img, cols);
  put_be32(lab, 0x801);
  put_be32(lab, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint32_t p = 0; p < rows * cols; ++p) {
      img.push_back(p == 0 ? 255 : static_cast<unsigned char>((i * 37) % 256));
    }
    lab.push_back(static_cast<unsigned char>(label_cycle[i % label_cycle.size()]));
  }
  std::ofstream(images, std::ios::binary).write(reinterpret_cast<const char*>(img.data()), img.size());
  std::ofstream(labels, std::ios::binary).write(reinterpret_cast<const char*>(lab.data()), lab.size());
}

}  // namespace

TEST(DatasetIo, RoundTripIsBitExact) {
  const auto dir = scratch_dir();
  const Dataset ds = small();
  save(ds, dir / "a.rslb");
  const Dataset back = load(dir / "a.rslb");
  EXPECT_EQ(std::memcmp(back.features.data(), ds.features.data(), sizeof(double) * 6), 0);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.provenance, ds.provenance);
  EXPECT_EQ(back.bounded, ds.bounded);
  EXPECT_EQ(back.num_classes, ds.num_classes);
  EXPECT_TRUE(back == ds);
  EXPECT_EQ(dataset_hash(back), dataset_hash(ds));
}

TEST(DatasetIo, LayoutMatchesFormat) {
  const auto bytes = serialize(small(true));
  const std::size_t header = 4 + 4 + 8 + 8 + 4 + 1 + 4 + std::strlen("unit:small");
  ASSERT_EQ(bytes.size(), header + 6 * 8 + 3 * 4);
  EXPECT_EQ(std::memcmp(bytes.data(), "RSLB", 4), 0);
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, 1u);
  std::uint64_t n, m;
  std::memcpy(&n, bytes.data() + 8, 8);
  std::memcpy(&m, bytes.data() + 16, 8);
  EXPECT_EQ(n, 3u);
  EXPECT_EQ(m, 2u);
  double second;
  std::memcpy(&second, bytes.data() + header + 8, 8);
  EXPECT_EQ(second, 0.2);
}

TEST(DatasetIo, BadMagic) {
  auto bytes = serialize(small());
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_EQ(load_kind(bytes), DataErrorKind::BadMagic);
}

TEST(DatasetIo, VersionMismatch) {
  auto bytes = serialize(small());
  bytes[4] = std::byte{2};
  EXPECT_EQ(load_kind(bytes), DataErrorKind::VersionMismatch);
}

TEST(DatasetIo, BoundedViolationNamesRowAndColumn) {
  Dataset ds = small(true);
  ds.features(2, 1) = 1.5;
  const auto bytes = serialize(ds);
  try {
    deserialize(bytes);
    FAIL() << "expected an invariant error";
  } catch (const Error& e) {
    EXPECT_EQ(e.data_kind(), DataErrorKind::Invariant);
    const std::string what = e.what();
    EXPECT_NE(what.find("row 2"), std::string::npos) << what;
    EXPECT_NE(what.find("column 1"), std::string::npos) << what;
  }
  EXPECT_THROW(save(ds, scratch_dir() / "bad.rslb"), Error);
}

TEST(DatasetIo, MissingFileIsIoError) {
  try {
    load(scratch_dir() / "does-not-exist.rslb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.data_kind(), DataErrorKind::Io);
  }
}

TEST(DatasetIo, EveryTruncationFails) {
  const auto bytes = serialize(ramp(4, 3));
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const auto kind = load_kind(std::span(bytes.data(), len));
    EXPECT_NE(kind, DataErrorKind::None) << "prefix of " << len << " bytes loaded";
  }
}

TEST(DatasetIo, StructuralFuzzNeverLoads) {
  const Dataset base = ramp(5, 4, 3);
  const auto good = serialize(base);
  Rng rng(77, 0);
  const std::size_t shape_off = 8;  // n then m, u64 each
  for (int t = 0; t < 2000; ++t) {
    auto bytes = good;
    switch (t % 6) {
      case 0:  // magic
        bytes[rng.below(4)] ^= std::byte(1 + rng.below(255));
        break;
      case 1:  // version
        bytes[4 + rng.below(4)] ^= std::byte(1 + rng.below(255));
        break;
      case 2:  // shape fields
        bytes[shape_off + rng.below(16)] ^= std::byte(1 + rng.below(255));
        break;
      case 3:  // trailing garbage
        for (std::uint64_t i = 0, e = 1 + rng.below(16); i < e; ++i) bytes.push_back(std::byte(rng.below(256)));
        break;
      case 4: {  // label out of range
        const std::size_t label_off = good.size() - 4 * 5 + 4 * rng.below(5);
        const std::uint32_t bad = 3 + static_cast<std::uint32_t>(rng.below(1000));
        std::memcpy(bytes.data() + label_off, &bad, 4);
        break;
      }
      case 5: {  // random garbage of random length
        bytes.resize(rng.below(200));
        for (auto& b : bytes) b = std::byte(rng.below(256));
        break;
      }
    }
    EXPECT_NE(load_kind(bytes), DataErrorKind::None) << "trial " << t;
  }
}

TEST(DatasetIo, NonFiniteAndOutOfRangeFeaturesFail) {
  const Dataset base = ramp(3, 2);
  const auto good = serialize(base);
  const std::size_t feat_off = good.size() - 3 * 4 - 6 * 8;
  for (double bad : {std::nan(""), std::numeric_limits<double>::infinity(), -0.5, 1.5}) {
    auto bytes = good;
    std::memcpy(bytes.data() + feat_off + 8 * 3, &bad, 8);
    EXPECT_EQ(load_kind(bytes), DataErrorKind::Invariant) << bad;
  }
}

TEST(DatasetIo, LoadedDatasetsKeepInvariants) {
  Rng rng(5, 0);
  for (int t = 0; t < 50; ++t) {
    const Dataset ds = ramp(1 + rng.below(20), 1 + rng.below(10), 2 + int(rng.below(5)));
    const Dataset back = deserialize(serialize(ds));
    EXPECT_NO_THROW(back.validate());
    EXPECT_TRUE(back == ds);
  }
}

TEST(Validate, RejectsBrokenDatasets) {
  Dataset ds = small();
  ds.labels = {0, 1};
  EXPECT_THROW(ds.validate(), Error);
  ds = small();
  ds.labels[0] = 2;
  EXPECT_THROW(ds.validate(), Error);
  ds = small();
  ds.features.resize(0, 2);
  ds.labels.clear();
  EXPECT_THROW(ds.validate(), Error);
}

TEST(ImportIdx, SyntheticFlatteningAndScaling) {
  const auto dir = scratch_dir();
  write_idx(dir / "img", dir / "lab", 30, 28, 28, {0, 1, 2});
  const Dataset ds = import_idx(dir / "img", dir / "lab", {2, 0}, 0);
  EXPECT_EQ(ds.dim(), 784);
  EXPECT_EQ(ds.size(), 20);
  EXPECT_TRUE(ds.bounded);
  EXPECT_EQ(ds.num_classes, 2);
  EXPECT_EQ(ds.features(0, 0), 1.0);
  // Row 0 is image 0 (label 0 -> class index 1); row 1 is image 2 (label 2 -> 0).
  EXPECT_EQ(ds.labels[0], 1);
  EXPECT_EQ(ds.labels[1], 0);
  EXPECT_EQ(ds.features(1, 5), double((2 * 37) % 256) / 255.0);
}

TEST(ImportIdx, LimitPerClass) {
  const auto dir = scratch_dir();
  write_idx(dir / "img", dir / "lab", 50, 4, 4, {0, 1, 1});
  const Dataset ds = import_idx(dir / "img", dir / "lab", {0, 1}, 10);
  EXPECT_EQ(ds.size(), 20);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 0), 10);
  // Class 0 has only 17 images: "when available".
  const Dataset all = import_idx(dir / "img", dir / "lab", {0, 1}, 30);
  EXPECT_EQ(std::count(all.labels.begin(), all.labels.end(), 0), 17);
  EXPECT_EQ(std::count(all.labels.begin(), all.labels.end(), 1), 30);
}

TEST(ImportIdx, Errors) {
  const auto dir = scratch_dir();
  write_idx(dir / "img", dir / "lab", 10, 4, 4, {0, 1});
  const auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.data_kind();
    }
    return DataErrorKind::None;
  };
  EXPECT_EQ(kind_of([&] { import_idx(dir / "img", dir / "lab", {0, 7}, 0); }),
            DataErrorKind::UnknownClass);
  EXPECT_EQ(kind_of([&] { import_idx(dir / "lab", dir / "lab", {0, 1}, 0); }),
            DataErrorKind::BadMagic);
  write_idx(dir / "img2", dir / "lab2", 10, 4, 4, {0, 1}, 0x802);
  EXPECT_EQ(kind_of([&] { import_idx(dir / "img2", dir / "lab2", {0, 1}, 0); }),
            DataErrorKind::BadMagic);
  write_idx(dir / "img3", dir / "lab3", 12, 4, 4, {0, 1});
  EXPECT_EQ(kind_of([&] { import_idx(dir / "img3", dir / "lab", {0, 1}, 0); }),
            DataErrorKind::DimensionMismatch);
}

TEST(ImportIdx, BundledMnistSubset) {
  const fs::path root = STABLAB_TEST_DATA_DIR;
  const Dataset ds = import_idx(root / "mnist/images-idx3-ubyte", root / "mnist/labels-idx1-ubyte",
                                {0, 1}, 500);
  EXPECT_EQ(ds.size(), 1000);
  EXPECT_EQ(ds.dim(), 784);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 0), 500);
  EXPECT_LE(ds.features.maxCoeff(), 1.0);
  EXPECT_GE(ds.features.minCoeff(), 0.0);
}

TEST(Split, DisjointCoverAndDeterministic) {
  Dataset ds = ramp(37, 2);
  // Tag each row with its index so the partition can be recovered.
  for (Eigen::Index i = 0; i < ds.size(); ++i) ds.features(i, 0) = double(i) / 100.0;
  Rng a(3, streams::kSplit), b(3, streams::kSplit);
  const auto [tr, te] = split(ds, 0.7, a);
  const auto [tr2, te2] = split(ds, 0.7, b);
  EXPECT_TRUE(tr == tr2);
  EXPECT_TRUE(te == te2);
  EXPECT_EQ(tr.size(), 25);  // floor(37 * 0.7)
  EXPECT_EQ(tr.size() + te.size(), 37);
  std::set<long> seen;
  for (const Dataset* part : {&tr, &te}) {
    for (Eigen::Index i = 0; i < part->size(); ++i) {
      const long idx = std::lround(part->features(i, 0) * 100.0);
      EXPECT_TRUE(seen.insert(idx).second) << "row " << idx << " appears twice";
      EXPECT_EQ(part->labels[i], ds.labels[idx]);
    }
  }
  EXPECT_EQ(seen.size(), 37u);
}

TEST(Split, Errors) {
  Rng rng(1, 0);
  EXPECT_THROW(split(ramp(10, 2), 0.0, rng), Error);
  EXPECT_THROW(split(ramp(10, 2), 1.0, rng), Error);
  EXPECT_THROW(split(ramp(1, 2), 0.5, rng), Error);
}

TEST(Mix, EndpointsReturnInputs) {
  const Dataset clean = ramp(10, 3);
  Dataset poisoned = clean;
  poisoned.features.array() *= 0.5;
  poisoned.provenance = "unit:poisoned";
  EXPECT_TRUE(mix(clean, poisoned, {1.0, {4, streams::kMix}}) == clean);
  EXPECT_TRUE(mix(clean, poisoned, {0.0, {4, streams::kMix}}) == poisoned);
}

TEST(Mix, FloorRuleAndLabels) {
  const Dataset clean = ramp(10, 3);
  Dataset poisoned = clean;
  poisoned.features.array() += 2.0;
  poisoned.bounded = false;
  const Dataset out = mix(clean, poisoned, {0.4, {4, streams::kMix}});
  int clean_rows = 0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    const bool is_clean = out.features.row(i) == clean.features.row(i);
    const bool is_poison = out.features.row(i) == poisoned.features.row(i);
    EXPECT_TRUE(is_clean != is_poison);
    clean_rows += is_clean;
  }
  EXPECT_EQ(clean_rows, 4);
  EXPECT_EQ(out.labels, clean.labels);
  EXPECT_EQ(mix(clean, poisoned, {0.4, {4, streams::kMix}}), out);
  EXPECT_EQ(mix(clean, poisoned, {0.99, {4, streams::kMix}}).features.rows(), 10);
}

TEST(Mix, Errors) {
  const Dataset clean = ramp(10, 3);
  Dataset other = clean;
  other.labels[3] = 1 - other.labels[3];
  try {
    mix(clean, other, {0.5, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.data_kind(), DataErrorKind::Alignment);
  }
  EXPECT_THROW(mix(clean, ramp(9, 3), {0.5, {}}), Error);
  EXPECT_THROW(mix(clean, clean, {1.5, {}}), Error);
}

TEST(Subset, PicksRows) {
  const Dataset ds = ramp(6, 2);
  const Dataset s = subset(ds, {4, 1});
  EXPECT_EQ(s.size(), 2);
  EXPECT_EQ(s.features.row(0), ds.features.row(4));
  EXPECT_EQ(s.labels[1], ds.labels[1]);
}

TEST(ExportCsv, HeaderAndLabelLast) {
  const auto dir = scratch_dir();
  export_csv(small(), dir / "a.csv");
  std::ifstream in(dir / "a.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "f0,f1,label");
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "0");
}
