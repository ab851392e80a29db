#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgrom/common.hpp"
#include "dgrom/geometry.hpp"
#include "dgrom/physics.hpp"

namespace dgrom {

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Run configuration. Text form is one `key = value` per line; `#` starts a comment.
struct RunConfig {
  double nu = 1.0;
  PenaltyMode c11_mode = PenaltyMode::scaled;
  double c11_value = 10.0;
  int degree = 2;
  int refinement = 3;
  Vec2 mu_bar{0.5, 0.3};
  ParameterBox param_box;
  Index n_snapshots = 100;
  Index n_test = 10;
  std::uint64_t seed = 42;
  double pod_tol = 0.0;  // energy tolerance; 0 keeps the numerical rank
  std::vector<Index> n_basis_list = default_basis_list();
  bool alpha_scaling = false;
  bool nu_scaled_volume = true;
  std::string output_dir = "out";

  static std::vector<Index> default_basis_list() {
    std::vector<Index> v;
    for (Index n = 1; n <= 20; ++n) v.push_back(n);
    return v;
  }

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    if (!(c11_value > 0.0)) throw ConfigError("c11_value must be positive");
    if (degree < 2) throw ConfigError("degree must be at least 2");
    if (refinement < 0 || refinement > 8) throw ConfigError("refinement must be in [0, 8]");
    if (!(param_box.x_lo < param_box.x_hi && param_box.y_lo < param_box.y_hi)) throw ConfigError("param_box is empty");
    if (!param_box.contains(mu_bar.x(), mu_bar.y())) throw ConfigError("mu_bar lies outside param_box");
    if (n_snapshots == 0) throw ConfigError("n_snapshots must be at least 1");
    if (n_basis_list.empty()) throw ConfigError("n_basis_list is empty");
    for (Index n : n_basis_list)
      if (n == 0) throw ConfigError("n_basis_list entries must be at least 1");
    if (pod_tol < 0.0 || pod_tol >= 1.0) throw ConfigError("pod_tol must be in [0, 1)");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
  }
};

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

inline unsigned long long parse_unsigned(const std::string& s) {
  if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument(s);
}

inline std::vector<double> parse_doubles(const std::string& s, Index n) {
  const auto parts = split_list(s);
  if (parts.size() != n) throw std::invalid_argument(s);
  std::vector<double> v;
  for (const auto& p : parts) v.push_back(parse_double(p));
  return v;
}

/// Comma list of sizes; `a-b` expands to the inclusive range.
inline std::vector<Index> parse_sizes(const std::string& s) {
  std::vector<Index> out;
  for (const auto& p : split_list(s)) {
    const auto dash = p.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_unsigned(p));
      continue;
    }
    const Index a = parse_unsigned(trim(p.substr(0, dash))), b = parse_unsigned(trim(p.substr(dash + 1)));
    if (a > b) throw std::invalid_argument(p);
    for (Index n = a; n <= b; ++n) out.push_back(n);
  }
  return out;
}

}  // namespace detail

inline std::string to_text(const RunConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "nu = " << format_double(c.nu) << "\n";
  os << "c11_mode = " << to_string(c.c11_mode) << "\n";
  os << "c11_value = " << format_double(c.c11_value) << "\n";
  os << "degree = " << c.degree << "\n";
  os << "refinement = " << c.refinement << "\n";
  os << "mu_bar = " << format_double(c.mu_bar.x()) << ", " << format_double(c.mu_bar.y()) << "\n";
  os << "param_box = " << format_double(c.param_box.x_lo) << ", " << format_double(c.param_box.x_hi) << ", "
     << format_double(c.param_box.y_lo) << ", " << format_double(c.param_box.y_hi) << "\n";
  os << "n_snapshots = " << c.n_snapshots << "\n";
  os << "n_test = " << c.n_test << "\n";
  os << "seed = " << c.seed << "\n";
  os << "pod_tol = " << format_double(c.pod_tol) << "\n";
  os << "n_basis_list = ";
  for (Index i = 0; i < c.n_basis_list.size(); ++i) os << (i ? ", " : "") << c.n_basis_list[i];
  os << "\n";
  os << "alpha_scaling = " << (c.alpha_scaling ? "true" : "false") << "\n";
  os << "nu_scaled_volume = " << (c.nu_scaled_volume ? "true" : "false") << "\n";
  os << "output_dir = " << c.output_dir << "\n";
  return os.str();
}

/// Parses config text on top of the defaults. Unknown keys, duplicates and malformed values
/// raise ConfigError naming the line and key.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> seen;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    for (const auto& k : seen)
      if (k == key) throw ConfigError(where + ": duplicate key '" + key + "'");
    seen.push_back(key);
    try {
      if (key == "nu") c.nu = detail::parse_double(value);
      else if (key == "c11_mode") {
        if (value == "constant") c.c11_mode = PenaltyMode::constant;
        else if (value == "scaled") c.c11_mode = PenaltyMode::scaled;
        else throw std::invalid_argument(value);
      } else if (key == "c11_value") c.c11_value = detail::parse_double(value);
      else if (key == "degree") c.degree = int(detail::parse_unsigned(value));
      else if (key == "refinement") c.refinement = int(detail::parse_unsigned(value));
      else if (key == "mu_bar") {
        const auto v = detail::parse_doubles(value, 2);
        c.mu_bar = Vec2(v[0], v[1]);
      } else if (key == "param_box") {
        const auto v = detail::parse_doubles(value, 4);
        c.param_box = ParameterBox{v[0], v[1], v[2], v[3]};
      } else if (key == "n_snapshots") c.n_snapshots = detail::parse_unsigned(value);
      else if (key == "n_test") c.n_test = detail::parse_unsigned(value);
      else if (key == "seed") c.seed = detail::parse_unsigned(value);
      else if (key == "pod_tol") c.pod_tol = detail::parse_double(value);
      else if (key == "n_basis_list") c.n_basis_list = detail::parse_sizes(value);
      else if (key == "alpha_scaling") c.alpha_scaling = detail::parse_bool(value);
      else if (key == "nu_scaled_volume") c.nu_scaled_volume = detail::parse_bool(value);
      else if (key == "output_dir") {
        if (value.empty()) throw std::invalid_argument(value);
        c.output_dir = value;
      } else
        throw ConfigError(where + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError(where + ": invalid value '" + value + "' for key '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError(where + ": value out of range for key '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline PhysicsConfig physics_for(const RunConfig& c, double h_min) {
  PhysicsConfig p;
  p.nu = c.nu;
  p.c11 = resolve_penalty(c.c11_mode, c.c11_value, c.degree, h_min);
  p.nu_scaled_volume = c.nu_scaled_volume;
  return p;
}

}  // namespace dgrom
