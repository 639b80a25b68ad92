#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stablab {

/// Flat key = value settings for one subcommand. Only declared keys are
/// accepted; values are kept as text and parsed on access so the resolved
/// configuration can be written back verbatim.
///
/// File syntax: UTF-8 lines `key = value`; `#` starts a comment; blank lines
/// are ignored. Keys may be spelled with '-' or '_'.
class RunConfig {
 public:
  void declare(const std::string& key, const std::string& default_value, const std::string& help);

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::string& help(const std::string& key) const;
  const std::vector<std::string>& keys() const noexcept { return order_; }

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// A budget is either an absolute value ("0.05") or a multiple of eps_a
  /// ("0.25x").
  double get_budget(const std::string& key, double eps_a) const;
  std::vector<double> get_budget_list(const std::string& key, double eps_a) const;

  /// `key = value` lines in declaration order, skipping `skip`.
  std::string to_string(const std::vector<std::string>& skip = {}) const;

  static std::string normalize(const std::string& key);

 private:
  struct Entry {
    std::string value;
    std::string help;
  };
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

double parse_budget(const std::string& text, double eps_a);

}  // namespace stablab
