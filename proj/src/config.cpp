#include "dsgd/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsgd {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

config config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

config config::parse_text(const std::string& text, const std::string& origin) {
  config c;
  c.text_ = text;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      c.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": empty key");
    auto& sec = c.sections_[section];
    if (sec.count(key))
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
    sec[key] = value;
  }
  return c;
}

bool config::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return fallback;
  const auto kit = it->second.find(key);
  return kit == it->second.end() ? fallback : kit->second;
}

long config::get_long(const std::string& section, const std::string& key,
                      long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    std::size_t pos = 0;
    const long v = std::stol(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key " + section + "." + key +
                                " is not an integer: '" + raw + "'");
  }
}

double config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key " + section + "." + key +
                                " is not a number: '" + raw + "'");
  }
}

bool config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw std::invalid_argument("config key " + section + "." + key +
                              " is not a boolean: '" + raw + "'");
}

std::uint64_t config::get_seed(const std::string& section, const std::string& key,
                               std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key " + section + "." + key +
                                " is not a seed: '" + raw + "'");
  }
}

std::vector<std::string> config::get_list(const std::string& section,
                                          const std::string& key) const {
  std::vector<std::string> out;
  std::string raw = get(section, key, "");
  std::istringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void config::validate(const std::string& section,
                      const std::set<std::string>& allowed_keys) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return;
  for (const auto& [key, value] : it->second)
    if (!allowed_keys.count(key))
      throw std::invalid_argument(origin_ + ": unknown key '" + key +
                                  "' in section [" + section + "]");
}

void config::validate_sections(const std::set<std::string>& allowed_sections) const {
  for (const auto& [name, keys] : sections_)
    if (!allowed_sections.count(name))
      throw std::invalid_argument(origin_ + ": unknown section [" + name + "]");
}

}  // namespace dsgd
