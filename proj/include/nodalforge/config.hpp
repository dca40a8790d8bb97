#pragma once
// Scenario configuration files: a TOML subset sufficient to mirror the
// Scenario type (top-level key = value pairs, one [tolerances] table, and
// repeated [[collars]] tables; values are strings, booleans, numbers, or
// flat arrays).  A file starts from the built-in defaults of its `name`
// and overrides the fields it mentions; the first [[collars]] table
// replaces the built-in collar list.

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "lab.hpp"

namespace nodalforge {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Strip a trailing comment (a '#' outside of quotes).
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

struct TomlValue {
  enum class Kind { string, boolean, number, array } kind = Kind::number;
  std::string str;
  bool b = false;
  double num = 0.0;
  std::vector<double> array;
};

inline TomlValue parse_toml_value(const std::string& raw,
                                  const std::string& context) {
  std::string v = trim(raw);
  require(!v.empty(), "config: empty value for " + context);
  TomlValue out;
  if (v.front() == '"') {
    require(v.size() >= 2 && v.back() == '"',
            "config: unterminated string for " + context);
    out.kind = TomlValue::Kind::string;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = TomlValue::Kind::boolean;
    out.b = v == "true";
    return out;
  }
  if (v.front() == '[') {
    require(v.back() == ']', "config: unterminated array for " + context);
    out.kind = TomlValue::Kind::array;
    std::string inner = v.substr(1, v.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.array.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error("config: bad array element '" + item + "' for " + context);
      }
    }
    return out;
  }
  try {
    std::size_t used = 0;
    out.num = std::stod(v, &used);
    require(used == v.size(), "config: trailing junk in number for " + context);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error("config: bad value '" + v + "' for " + context);
  }
  return out;
}

inline int toml_int(const TomlValue& v, const std::string& context) {
  require(v.kind == TomlValue::Kind::number,
          "config: expected a number for " + context);
  return static_cast<int>(v.num);
}

inline double toml_double(const TomlValue& v, const std::string& context) {
  require(v.kind == TomlValue::Kind::number,
          "config: expected a number for " + context);
  return v.num;
}

}  // namespace detail

/// Parse a scenario config.  See the header comment for the accepted
/// grammar; unknown keys are an error so typos cannot silently fall back
/// to defaults.
inline Scenario parse_scenario_config(const std::string& text) {
  using detail::TomlValue;

  // first pass: find the scenario name so defaults can seed everything else
  std::istringstream pre(text);
  std::string line, name;
  while (std::getline(pre, line)) {
    line = detail::trim(detail::strip_comment(line));
    if (line.rfind("name", 0) == 0) {
      std::size_t eq = line.find('=');
      require(eq != std::string::npos, "config: malformed name line");
      TomlValue v = detail::parse_toml_value(line.substr(eq + 1), "name");
      require(v.kind == TomlValue::Kind::string,
              "config: name must be a quoted string");
      name = v.str;
      break;
    }
  }
  require(!name.empty(), "config: missing required key 'name'");
  Scenario sc = make_scenario(name);

  enum class Section { top, tolerances, collar };
  Section section = Section::top;
  bool collars_cleared = false;

  std::istringstream in(text);
  while (std::getline(in, line)) {
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;

    if (line == "[tolerances]") {
      section = Section::tolerances;
      continue;
    }
    if (line == "[[collars]]") {
      if (!collars_cleared) {
        sc.collars.clear();
        collars_cleared = true;
      }
      sc.collars.push_back(CollarSpec{});
      section = Section::collar;
      continue;
    }
    require(line.front() != '[', "config: unknown section " + line);

    std::size_t eq = line.find('=');
    require(eq != std::string::npos, "config: expected key = value: " + line);
    std::string key = detail::trim(line.substr(0, eq));
    TomlValue v = detail::parse_toml_value(line.substr(eq + 1), key);

    if (section == Section::tolerances) {
      if (key == "eig_tol") sc.tol.eig_tol = detail::toml_double(v, key);
      else if (key == "profile_tol") sc.tol.profile_tol = detail::toml_double(v, key);
      else if (key == "position_tol") sc.tol.position_tol = detail::toml_double(v, key);
      else if (key == "gap_min") sc.tol.gap_min = detail::toml_double(v, key);
      else throw Error("config: unknown tolerance key " + key);
      continue;
    }
    if (section == Section::collar) {
      CollarSpec& c = sc.collars.back();
      if (key == "sigma") {
        require(v.kind == TomlValue::Kind::string,
                "config: sigma must be a string");
        if (v.str == "circle") c.sigma = SigmaModel::circle;
        else if (v.str == "sphere2") c.sigma = SigmaModel::sphere2;
        else if (v.str == "torus2") c.sigma = SigmaModel::torus2;
        else if (v.str == "custom") c.sigma = SigmaModel::custom;
        else throw Error("config: unknown sigma model " + v.str);
      } else if (key == "r") c.r = detail::toml_double(v, key);
      else if (key == "gamma") c.gamma = detail::toml_double(v, key);
      else if (key == "layers") c.layers = detail::toml_int(v, key);
      else if (key == "modes") c.modes = detail::toml_int(v, key);
      else throw Error("config: unknown collar key " + key);
      continue;
    }

    if (key == "name") continue;  // consumed in the first pass
    else if (key == "n") sc.n = detail::toml_int(v, key);
    else if (key == "l") sc.l = detail::toml_int(v, key);
    else if (key == "eps_list") {
      require(v.kind == TomlValue::Kind::array,
              "config: eps_list must be an array");
      sc.eps_list = v.array;
    } else if (key == "delta") sc.delta = detail::toml_double(v, key);
    else if (key == "smooth_order") sc.smooth_order = detail::toml_int(v, key);
    else if (key == "refinement") sc.refinement = detail::toml_int(v, key);
    else if (key == "seed")
      sc.seed = static_cast<std::uint64_t>(detail::toml_double(v, key));
    else if (key == "run_morse") {
      require(v.kind == TomlValue::Kind::boolean,
              "config: run_morse must be true/false");
      sc.run_morse = v.b;
    } else if (key == "betti_reference") {
      require(v.kind == TomlValue::Kind::array,
              "config: betti_reference must be an array");
      sc.betti_reference.clear();
      for (double x : v.array) sc.betti_reference.push_back(static_cast<int>(x));
    } else throw Error("config: unknown key " + key);
  }

  validate_scenario(sc);
  return sc;
}

inline Scenario load_scenario_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_config(buf.str());
}

/// Emit a config file that parses back to exactly this scenario, with each
/// field documented.
inline std::string scenario_config_toml(const Scenario& sc) {
  std::ostringstream os;
  os.precision(17);
  os << "# scenario configuration (parsed as a TOML subset)\n";
  os << "name = \"" << to_string(sc.name) << "\"  # built-in family\n";
  os << "n = " << sc.n << "  # manifold dimension\n";
  os << "l = " << sc.l << "  # tracked low modes\n";
  os << "eps_list = [";
  for (std::size_t i = 0; i < sc.eps_list.size(); ++i)
    os << (i ? ", " : "") << sc.eps_list[i];
  os << "]  # squashing sweep, strictly decreasing in (0,1)\n";
  os << "delta = " << sc.delta << "  # smoothing width (0 = sharp)\n";
  os << "smooth_order = " << sc.smooth_order
     << "  # transition continuity (0, 1, or 2)\n";
  os << "refinement = " << sc.refinement << "  # cross-section resolution\n";
  os << "seed = " << sc.seed << "  # eigensolver start seed\n";
  os << "run_morse = " << (sc.run_morse ? "true" : "false")
     << "  # classify critical points of each mode\n";
  if (!sc.betti_reference.empty()) {
    os << "betti_reference = [";
    for (std::size_t i = 0; i < sc.betti_reference.size(); ++i)
      os << (i ? ", " : "") << sc.betti_reference[i];
    os << "]  # Betti targets for the critical-point check\n";
  }
  os << "\n[tolerances]\n";
  os << "eig_tol = " << sc.tol.eig_tol << "  # eigensolver residual\n";
  os << "profile_tol = " << sc.tol.profile_tol
     << "  # collar profile misfit (relative L2)\n";
  os << "position_tol = " << sc.tol.position_tol
     << "  # nodal copy placement (collar units)\n";
  os << "gap_min = " << sc.tol.gap_min << "  # minimum relative gap\n";
  for (const auto& c : sc.collars) {
    os << "\n[[collars]]\n";
    os << "sigma = \"" << sigma_model_name(c.sigma)
       << "\"  # cross-section model\n";
    os << "r = " << c.r << "  # cross-section scale\n";
    os << "gamma = " << c.gamma << "  # collar half-width factor in (1/2, 1]\n";
    os << "layers = " << c.layers << "  # element layers across the collar\n";
    os << "modes = " << c.modes << "  # low modes carried by this collar\n";
  }
  return os.str();
}

}  // namespace nodalforge
