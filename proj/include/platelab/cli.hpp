#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace platelab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value configuration; keys are normalized to dashes, later sources override earlier ones.
class RunConfig {
 public:
  struct Entry {
    std::string value;
    std::string source;
  };

  static RunConfig parse(std::istream& in, const std::string& source);
  static RunConfig load(const std::string& path);
  static std::string normalize_key(const std::string& key);

  void set(const std::string& key, const std::string& value, const std::string& source);
  void merge(const RunConfig& other);
  bool has(const std::string& key) const;
  const Entry& entry(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, Entry> entries_;
};

/// JSON text with every floating-point number at 17 significant digits
std::string dump_json(const nlohmann::json& j, int indent = 2);

std::vector<std::string> command_names();

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace platelab::cli
