#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdpm/constitutive.hpp"
#include "mdpm/operators.hpp"

namespace mdpm {

// Minimal TOML-style reader: [section] headers, key = value lines, # comments.  Values are
// quoted strings, numbers, booleans or flat arrays of numbers.
class ConfigFile {
 public:
  std::map<std::string, std::map<std::string, std::string>> sections;

  static ConfigFile parse(const std::string& text);
  static ConfigFile read(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_array(const std::string& section, const std::string& key,
                                const std::vector<double>& fallback) const;
  // Keys of the form "<prefix>.<int>" in a section, mapped by the integer suffix.
  std::map<int, std::string> indexed(const std::string& section, const std::string& prefix) const;
};

enum class Formulation { standard, degenerate };

// Per-subdomain scalar with overrides keyed by node id; lookup tries the node, then its
// root id, then the default.
struct NodeScalar {
  double value = 1.0;
  std::map<int, double> by_node;

  double at(const MdGeometry& g, int node) const;
};

struct ForcingSpec {
  Vec2 body = Vec2::Zero();              // r_s on every free vertex dof
  std::map<int, Vec2> traction;          // boundary edge -> traction vector
  double source = 0.0;                   // r_m amplitude
  bool source_zero_mean = false;         // alternate the sign between the two halves of the domain
  Vec2 gravity = Vec2::Zero();           // r_g driving gradient (bulk flux dofs)
  double ramp = 0.0;                     // linear ramp time (0: step load)
  double period = 0.0;                   // > 0: multiply by sin(2πt / period)
  double switch_off = -1.0;              // >= 0: forcing vanishes after this time
  double amplitude = 1.0;

  double envelope(double t) const;
};

struct ModelConfig {
  std::string geometry_file;
  double h = 1.0 / 16.0;

  double rho = 1.0;
  NodeScalar beta;
  NodeScalar alpha;
  double mu = 1.0, lambda = 1.0;
  double mu_skin = 1.0, lambda_skin = 1.0;
  bool coating = true;

  RelationLabel tangential = RelationLabel::tresca_regularized;
  RelationLabel normal = RelationLabel::contact_perp_regularized;
  bool coulomb = false;
  double friction_coefficient = 0.0;
  RelationParams fracture;  // τ, C³, C⁴, c_∞, č and linear stiffness

  NodeScalar kappa1;
  NodeScalar kappa2{0.0, {}};

  double nu = 1.0;
  double dt = 0.01;
  double T = 1.0;
  Formulation formulation = Formulation::standard;

  BoundaryConditions bc;
  ForcingSpec forcing;

  std::string output_dir = "output";
  int vtk_every = 0;

  int steps() const;
  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

ModelConfig parse_model_config(const ConfigFile& file);
ModelConfig load_model_config(const std::string& path);
std::string resolve_data_path(const std::string& path);

}  // namespace mdpm
