#include "stablab/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stablab/errors.hpp"

namespace stablab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw_config("'" + key + "' expects a real number, got '" + text + "'");
  }
  return value;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw_config("'" + key + "' expects an integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

std::string RunConfig::normalize(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

void RunConfig::declare(const std::string& key, const std::string& default_value,
                        const std::string& help) {
  const auto name = normalize(key);
  if (!entries_.contains(name)) order_.push_back(name);
  entries_[name] = {default_value, help};
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw_config(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto name = normalize(key);
  auto it = entries_.find(name);
  if (it == entries_.end()) throw_config("unknown configuration key '" + key + "'");
  it->second.value = value;
}

bool RunConfig::has(const std::string& key) const { return entries_.contains(normalize(key)); }

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = entries_.find(normalize(key));
  if (it == entries_.end()) throw_config("undeclared configuration key '" + key + "'");
  return it->second.value;
}

const std::string& RunConfig::help(const std::string& key) const {
  const auto it = entries_.find(normalize(key));
  if (it == entries_.end()) throw_config("undeclared configuration key '" + key + "'");
  return it->second.help;
}

double RunConfig::get_double(const std::string& key) const { return to_double(key, get(key)); }

int RunConfig::get_int(const std::string& key) const { return to_integer<int>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return to_integer<std::uint64_t>(key, get(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw_config("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get(key))) out.push_back(to_integer<int>(key, item));
  return out;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  return split_list(get(key));
}

double parse_budget(const std::string& text, double eps_a) {
  const auto t = trim(text);
  if (!t.empty() && (t.back() == 'x' || t.back() == 'X')) {
    return to_double("budget", t.substr(0, t.size() - 1)) * eps_a;
  }
  return to_double("budget", t);
}

double RunConfig::get_budget(const std::string& key, double eps_a) const {
  const double v = parse_budget(get(key), eps_a);
  if (v < 0.0) throw_config("'" + key + "' must be non-negative");
  return v;
}

std::vector<double> RunConfig::get_budget_list(const std::string& key, double eps_a) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    const double v = parse_budget(item, eps_a);
    if (v < 0.0) throw_config("'" + key + "' entries must be non-negative");
    out.push_back(v);
  }
  return out;
}

std::string RunConfig::to_string(const std::vector<std::string>& skip) const {
  std::ostringstream out;
  for (const auto& key : order_) {
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    out << key << " = " << entries_.at(key).value << '\n';
  }
  return out.str();
}

}  // namespace stablab
