#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dsgd {

// Flat key = value configuration with [section] headers and '#' comments.
// Unknown keys are rejected by validate() so typos in experiment definitions
// fail loudly instead of being ignored.
class config {
 public:
  static config parse_file(const std::string& path);
  static config parse_text(const std::string& text, const std::string& origin = "<inline>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::uint64_t get_seed(const std::string& section, const std::string& key,
                         std::uint64_t fallback) const;
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const;  // comma-separated

  // throws std::invalid_argument listing any key outside the allowed set
  void validate(const std::string& section,
                const std::set<std::string>& allowed_keys) const;
  void validate_sections(const std::set<std::string>& allowed_sections) const;

  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string text_;
  std::string origin_;
};

}  // namespace dsgd
