#pragma once

// Little-endian byte packing shared by the RSLB and RSLM containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stablab/errors.hpp"

namespace stablab::detail {

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

class ByteWriter {
 public:
  void magic(std::string_view tag) {
    for (char c : tag) buf_.push_back(static_cast<std::byte>(c));
  }
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::byte*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    buf_.insert(buf_.end(), p, p + s.size());
  }
  void put_doubles(const double* data, std::size_t count) {
    const auto* p = reinterpret_cast<const std::byte*>(data);
    buf_.insert(buf_.end(), p, p + count * sizeof(double));
  }
  std::vector<std::byte> take() { return std::move(buf_); }

 private:
  std::vector<std::byte> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  bool magic(std::string_view tag) {
    need(tag.size(), "magic");
    const bool ok = std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) == 0;
    pos_ += tag.size();
    return ok;
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(const char* what) {
    const auto len = get<std::uint32_t>(what);
    need(len, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  void get_doubles(double* out, std::size_t count, const char* what) {
    if (count > remaining() / sizeof(double)) truncated(what);
    std::memcpy(out, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (n > remaining()) truncated(what);
  }
  [[noreturn]] static void truncated(const char* what) {
    throw_data(DataErrorKind::Truncated, std::string("truncated payload while reading ") + what);
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data(DataErrorKind::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw_data(DataErrorKind::Io, "read failed for " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data(DataErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data(DataErrorKind::Io, "write failed for " + path.string());
}

}  // namespace stablab::detail
