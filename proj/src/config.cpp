#include "mdpm/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mdpm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

double to_double(const std::string& raw, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + raw + "'");
  }
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile f;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      f.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (f.sections[section].count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    f.sections[section][key] = value;
  }
  return f;
}

ConfigFile ConfigFile::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& raw = sections.at(section).at(key);
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
    throw ConfigError(section + "." + key + ": expected a quoted string");
  }
  return raw.substr(1, raw.size() - 2);
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  return to_double(sections.at(section).at(key), section + "." + key);
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  const double v = get_double(section, key, fallback);
  if (v != std::floor(v)) throw ConfigError(section + "." + key + ": expected an integer");
  return static_cast<int>(v);
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& raw = sections.at(section).at(key);
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw ConfigError(section + "." + key + ": expected true or false");
}

std::vector<double> ConfigFile::get_array(const std::string& section, const std::string& key,
                                          const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& raw = sections.at(section).at(key);
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
    throw ConfigError(section + "." + key + ": expected an array");
  }
  std::vector<double> out;
  std::stringstream ss(raw.substr(1, raw.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, section + "." + key));
  }
  return out;
}

std::map<int, std::string> ConfigFile::indexed(const std::string& section, const std::string& prefix) const {
  std::map<int, std::string> out;
  auto it = sections.find(section);
  if (it == sections.end()) return out;
  for (const auto& [key, value] : it->second) {
    if (key.rfind(prefix + ".", 0) != 0) continue;
    const std::string idx = key.substr(prefix.size() + 1);
    out[static_cast<int>(to_double(idx, section + "." + key))] = key;
  }
  return out;
}

double NodeScalar::at(const MdGeometry& g, int node) const {
  auto it = by_node.find(node);
  if (it != by_node.end()) return it->second;
  it = by_node.find(g.node(node).root_id);
  if (it != by_node.end()) return it->second;
  return value;
}

double ForcingSpec::envelope(double t) const {
  if (switch_off >= 0.0 && t > switch_off) return 0.0;
  double e = amplitude;
  if (ramp > 0.0) e *= std::min(1.0, t / ramp);
  if (period > 0.0) e *= std::sin(2.0 * M_PI * t / period);
  return e;
}

int ModelConfig::steps() const { return static_cast<int>(std::llround(T / dt)); }

void ModelConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ConfigError(std::string(name) + " must be nonnegative");
  };
  positive(h, "geometry.h");
  positive(rho, "material.rho");
  positive(beta.value, "material.beta");
  for (const auto& [n, v] : beta.by_node) positive(v, "material.beta");
  nonneg(alpha.value, "material.alpha");
  for (const auto& [n, v] : alpha.by_node) nonneg(v, "material.alpha");
  positive(mu, "material.mu");
  positive(2.0 * mu + 2.0 * lambda, "material.mu + material.lambda");
  if (coating) {
    positive(mu_skin, "material.mu_skin");
    positive(2.0 * mu_skin + lambda_skin, "2 material.mu_skin + material.lambda_skin");
  }
  nonneg(fracture.tau, "fracture.tau");
  nonneg(fracture.c3, "fracture.c3");
  if (!(fracture.c4 >= 1.0)) throw ConfigError("fracture.c4 must be at least 1");
  positive(fracture.c_inf, "fracture.c_inf");
  nonneg(fracture.c_check, "fracture.c_check");
  positive(fracture.stiffness, "fracture.stiffness");
  nonneg(friction_coefficient, "fracture.friction_coefficient");
  positive(kappa1.value, "flow.kappa1");
  for (const auto& [n, v] : kappa1.by_node) positive(v, "flow.kappa1");
  nonneg(kappa2.value, "flow.kappa2");
  for (const auto& [n, v] : kappa2.by_node) nonneg(v, "flow.kappa2");
  positive(nu, "time.nu");
  positive(dt, "time.dt");
  positive(T, "time.T");
  if (T / dt > 1e6) throw ConfigError("time.T / time.dt exceeds 1e6 steps");
  const bool tangential_ok = tangential == RelationLabel::tresca || tangential == RelationLabel::tresca_regularized ||
                             tangential == RelationLabel::frictionless || tangential == RelationLabel::linear;
  if (!tangential_ok) throw ConfigError(std::string("fracture.tangential cannot be ") + to_string(tangential));
  const bool normal_ok = normal == RelationLabel::contact_perp || normal == RelationLabel::contact_perp_regularized ||
                         normal == RelationLabel::signorini || normal == RelationLabel::linear;
  if (!normal_ok) throw ConfigError(std::string("fracture.normal cannot be ") + to_string(normal));
  if (formulation == Formulation::degenerate &&
      (tangential == RelationLabel::tresca_regularized || normal == RelationLabel::contact_perp_regularized)) {
    throw ConfigError("the degenerate formulation uses the unregularized fracture laws");
  }
  if (vtk_every < 0) throw ConfigError("output.vtk_every must be nonnegative");
}

namespace {

NodeScalar read_scalar(const ConfigFile& f, const std::string& section, const std::string& key, double fallback) {
  NodeScalar s;
  s.value = f.get_double(section, key, fallback);
  for (const auto& [node, full] : f.indexed(section, key)) s.by_node[node] = f.get_double(section, full, 0.0);
  return s;
}

Vec2 read_vec2(const ConfigFile& f, const std::string& section, const std::string& key) {
  const auto a = f.get_array(section, key, {0.0, 0.0});
  if (a.size() != 2) throw ConfigError(section + "." + key + ": expected two components");
  return Vec2(a[0], a[1]);
}

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"geometry", {"file", "h"}},
    {"material", {"rho", "beta", "alpha", "mu", "lambda", "mu_skin", "lambda_skin", "coating"}},
    {"fracture",
     {"tangential", "normal", "tau", "c3", "c4", "c_inf", "c_check", "stiffness", "friction_coefficient"}},
    {"flow", {"kappa1", "kappa2"}},
    {"time", {"dt", "T", "nu", "formulation"}},
    {"bc", {"mech", "flow"}},
    {"forcing", {"body", "traction", "source", "source_zero_mean", "gravity", "ramp", "period", "switch_off", "amplitude"}},
    {"output", {"dir", "vtk_every"}},
};

void check_keys(const ConfigFile& f) {
  for (const auto& [section, keys] : f.sections) {
    auto known = kKnownKeys.find(section);
    if (known == kKnownKeys.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      const std::string base = key.substr(0, key.find('.'));
      bool ok = false;
      for (const auto& k : known->second) ok = ok || k == base;
      if (!ok) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

}  // namespace

ModelConfig parse_model_config(const ConfigFile& f) {
  check_keys(f);
  ModelConfig c;
  c.geometry_file = f.get_string("geometry", "file", "");
  if (c.geometry_file.empty()) throw ConfigError("geometry.file is required");
  c.h = f.get_double("geometry", "h", c.h);

  c.rho = f.get_double("material", "rho", c.rho);
  c.beta = read_scalar(f, "material", "beta", 1.0);
  c.alpha = read_scalar(f, "material", "alpha", 1.0);
  c.mu = f.get_double("material", "mu", c.mu);
  c.lambda = f.get_double("material", "lambda", c.lambda);
  c.mu_skin = f.get_double("material", "mu_skin", c.mu_skin);
  c.lambda_skin = f.get_double("material", "lambda_skin", c.lambda_skin);
  c.coating = f.get_bool("material", "coating", c.coating);

  const std::string tangential = f.get_string("fracture", "tangential", to_string(c.tangential));
  if (tangential == "coulomb") {
    c.coulomb = true;
    c.tangential = RelationLabel::tresca;
  } else {
    c.tangential = parse_relation_label(tangential);
  }
  c.normal = parse_relation_label(f.get_string("fracture", "normal", to_string(c.normal)));
  c.fracture.tau = f.get_double("fracture", "tau", c.fracture.tau);
  c.fracture.c3 = f.get_double("fracture", "c3", c.fracture.c3);
  c.fracture.c4 = f.get_double("fracture", "c4", c.fracture.c4);
  c.fracture.c_inf = f.get_double("fracture", "c_inf", c.fracture.c_inf);
  c.fracture.c_check = f.get_double("fracture", "c_check", 1e-6);
  c.fracture.stiffness = f.get_double("fracture", "stiffness", c.fracture.stiffness);
  c.friction_coefficient = f.get_double("fracture", "friction_coefficient", c.friction_coefficient);

  c.kappa1 = read_scalar(f, "flow", "kappa1", 1.0);
  c.kappa2 = read_scalar(f, "flow", "kappa2", 0.0);

  c.dt = f.get_double("time", "dt", c.dt);
  c.T = f.get_double("time", "T", c.T);
  c.nu = f.get_double("time", "nu", c.nu);
  const std::string form = f.get_string("time", "formulation", "standard");
  if (form == "standard") c.formulation = Formulation::standard;
  else if (form == "degenerate") c.formulation = Formulation::degenerate;
  else throw ConfigError("time.formulation must be \"standard\" or \"degenerate\"");

  for (const auto& [edge, key] : f.indexed("bc", "mech")) c.bc.mech[edge] = parse_mech_bc(f.get_string("bc", key, ""));
  for (const auto& [edge, key] : f.indexed("bc", "flow")) c.bc.flow[edge] = parse_flow_bc(f.get_string("bc", key, ""));

  c.forcing.body = read_vec2(f, "forcing", "body");
  for (const auto& [edge, key] : f.indexed("forcing", "traction")) c.forcing.traction[edge] = read_vec2(f, "forcing", key);
  c.forcing.source = f.get_double("forcing", "source", 0.0);
  c.forcing.source_zero_mean = f.get_bool("forcing", "source_zero_mean", false);
  c.forcing.gravity = read_vec2(f, "forcing", "gravity");
  c.forcing.ramp = f.get_double("forcing", "ramp", 0.0);
  c.forcing.period = f.get_double("forcing", "period", 0.0);
  c.forcing.switch_off = f.get_double("forcing", "switch_off", -1.0);
  c.forcing.amplitude = f.get_double("forcing", "amplitude", 1.0);

  c.output_dir = f.get_string("output", "dir", c.output_dir);
  c.vtk_every = f.get_int("output", "vtk_every", 0);
  c.validate();
  return c;
}

ModelConfig load_model_config(const std::string& path) { return parse_model_config(ConfigFile::read(path)); }

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  const fs::path in_data = fs::path(MDPM_DATA_DIR).parent_path() / path;
  if (fs::exists(in_data)) return in_data.string();
  const fs::path under_data = fs::path(MDPM_DATA_DIR) / path;
  if (fs::exists(under_data)) return under_data.string();
  const fs::path in_geometries = fs::path(MDPM_DATA_DIR) / "geometries" / path;
  if (fs::exists(in_geometries)) return in_geometries.string();
  return path;
}

}  // namespace mdpm
