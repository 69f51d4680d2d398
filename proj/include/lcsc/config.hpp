#pragma once

// Run configuration: a sectioned key=value file ([network], [train], [data],
// [output]) plus "section.key=value" overrides. Unknown sections or keys are
// errors. write_ini() emits every field, so the effective configuration of a
// run can be saved and loaded back unchanged.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lcsc/dataset.hpp"
#include "lcsc/optimizer.hpp"

namespace lcsc {

struct RunConfig {
  NetworkConfig network;
  TrainSchedule schedule;
  DataConfig data;
  std::string out_dir = "runs/default";

  void validate() const {
    network.validate();
    schedule.validate();
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// section -> key -> raw value, in file order within each section
using IniTable = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

template <typename N>
N parse_number(const std::string& section, const std::string& key, const std::string& v) {
  N out{};
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || v.empty())
    throw ConfigError(where(section, key) + ": cannot parse '" + v + "' as a number");
  return out;
}

inline std::size_t parse_size(const std::string& s, const std::string& k, const std::string& v) {
  if (!v.empty() && v.front() == '-') throw ConfigError(where(s, k) + ": must be non-negative, got '" + v + "'");
  return parse_number<std::size_t>(s, k, v);
}

inline bool parse_bool(const std::string& s, const std::string& k, const std::string& v) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError(where(s, k) + ": expected a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& s, const std::string& k, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(s, k, trim(item)));
  if (out.empty()) throw ConfigError(where(s, k) + ": empty list");
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline IniTable parse_ini(std::istream& in, const std::string& what = "config") {
  IniTable t;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // A '#' or ';' starting the line or preceded by whitespace begins a comment.
    for (std::size_t i = 1; i < line.size(); ++i)
      if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    const std::string s = detail::trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    const std::string at = what + ":" + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(at + "unterminated section header");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      t[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
    if (section.empty()) throw ConfigError(at + "key outside any section");
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    if (key.empty()) throw ConfigError(at + "empty key");
    if (t[section].count(key)) throw ConfigError(at + "duplicate key " + section + "." + key);
    t[section][key] = detail::trim(std::string_view(s).substr(eq + 1));
  }
  return t;
}

inline IniTable read_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_ini(in, path.string());
}

// "section.key=value"
inline void apply_override(IniTable& t, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string section = detail::trim(std::string_view(assignment).substr(0, dot));
  const std::string key = detail::trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1));
  if (section.empty() || key.empty()) throw ConfigError("override '" + assignment + "' has an empty section or key");
  t[section][key] = detail::trim(std::string_view(assignment).substr(eq + 1));
}

// Builds a RunConfig on top of the defaults. A single rho value applies to
// every block.
inline RunConfig run_config_from_table(const IniTable& t) {
  using namespace detail;
  RunConfig rc;
  std::vector<double> rho;
  for (const auto& [section, kv] : t) {
    for (const auto& [k, v] : kv) {
      auto unknown = [&] { return ConfigError("unknown key " + where(section, k)); };
      if (section == "network") {
        auto& n = rc.network;
        if (k == "blocks") n.blocks = parse_size(section, k, v);
        else if (k == "units_per_block") n.units_per_block = parse_size(section, k, v);
        else if (k == "width") n.width = parse_size(section, k, v);
        else if (k == "rho") rho = parse_list(section, k, v);
        else if (k == "enhanced") n.enhanced = parse_bool(section, k, v);
        else if (k == "scale") n.scale = parse_size(section, k, v);
        else if (k == "head") n.head = parse_head(v);
        else if (k == "fusion") n.fusion = parse_bool(section, k, v);
        else if (k == "residual") n.residual_target = parse_bool(section, k, v);
        else if (k == "in_channels") n.in_channels = parse_size(section, k, v);
        else if (k == "seed") n.seed = parse_number<std::uint64_t>(section, k, v);
        else throw unknown();
      } else if (section == "train") {
        auto& s = rc.schedule;
        if (k == "initial_lr") s.initial_lr = parse_number<double>(section, k, v);
        else if (k == "decay_every") s.decay_every = parse_size(section, k, v);
        else if (k == "decay_factor") s.decay_factor = parse_number<double>(section, k, v);
        else if (k == "epochs") s.total_epochs = parse_size(section, k, v);
        else if (k == "batch_size") s.batch_size = parse_size(section, k, v);
        else if (k == "beta") s.beta = parse_number<double>(section, k, v);
        else throw unknown();
      } else if (section == "data") {
        auto& d = rc.data;
        if (k == "root") d.root = v;
        else if (k == "manifest") d.manifest = v;
        else if (k == "val_dir") d.val_dir = v;
        else if (k == "patch_size") d.patch_size = parse_size(section, k, v);
        else if (k == "stride") d.stride = parse_size(section, k, v);
        else if (k == "augment") d.augment = parse_bool(section, k, v);
        else if (k == "max_patches") d.max_patches = parse_size(section, k, v);
        else throw unknown();
      } else if (section == "output") {
        if (k == "dir") rc.out_dir = v;
        else throw unknown();
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  if (rho.size() == 1) rho.assign(rc.network.blocks, rho.front());
  if (!rho.empty()) rc.network.rho = std::move(rho);
  else rc.network.rho.assign(rc.network.blocks, 0.5);
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  IniTable t = path.empty() ? IniTable{} : read_ini(path);
  for (const auto& o : overrides) apply_override(t, o);
  RunConfig rc = run_config_from_table(t);
  rc.validate();
  return rc;
}

inline std::string write_ini(const RunConfig& rc) {
  using detail::format_double;
  std::ostringstream o;
  const auto& n = rc.network;
  const auto& s = rc.schedule;
  const auto& d = rc.data;
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::string rho;
  for (std::size_t i = 0; i < n.rho.size(); ++i) rho += (i ? ", " : "") + format_double(n.rho[i]);
  o << "[network]\n"
    << "blocks = " << n.blocks << "\n"
    << "units_per_block = " << n.units_per_block << "\n"
    << "width = " << n.width << "\n"
    << "rho = " << rho << "\n"
    << "enhanced = " << b(n.enhanced) << "\n"
    << "scale = " << n.scale << "\n"
    << "head = " << to_string(n.head) << "\n"
    << "fusion = " << b(n.fusion) << "\n"
    << "residual = " << b(n.residual_target) << "\n"
    << "in_channels = " << n.in_channels << "\n"
    << "seed = " << n.seed << "\n\n"
    << "[train]\n"
    << "initial_lr = " << format_double(s.initial_lr) << "\n"
    << "decay_every = " << s.decay_every << "\n"
    << "decay_factor = " << format_double(s.decay_factor) << "\n"
    << "epochs = " << s.total_epochs << "\n"
    << "batch_size = " << s.batch_size << "\n"
    << "beta = " << format_double(s.beta) << "\n\n"
    << "[data]\n"
    << "root = " << d.root << "\n"
    << "manifest = " << d.manifest << "\n"
    << "val_dir = " << d.val_dir << "\n"
    << "patch_size = " << d.patch_size << "\n"
    << "stride = " << d.stride << "\n"
    << "augment = " << b(d.augment) << "\n"
    << "max_patches = " << d.max_patches << "\n\n"
    << "[output]\n"
    << "dir = " << rc.out_dir << "\n";
  return o.str();
}

}  // namespace lcsc
