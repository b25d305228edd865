#include "mdpm/output.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mdpm {

std::string summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["config"] = s.config;
  j["steps"] = s.steps;
  j["dt"] = s.dt;
  j["nu"] = s.nu;
  j["weighted_norm"] = s.weighted_norm;
  j["weighted_forcing_norm"] = s.weighted_forcing_norm;
  j["bound_ratio"] = s.bound_ratio ? nlohmann::json(*s.bound_ratio) : nlohmann::json(nullptr);
  j["newton_iterations"] = s.newton_iterations;
  j["max_newton_iterations"] =
      s.newton_iterations.empty() ? 0 : *std::max_element(s.newton_iterations.begin(), s.newton_iterations.end());
  j["fallback_steps"] = s.fallback_steps;
  j["rate_cap_warning"] = s.rate_cap_warning;
  j["initial_mass"] = s.initial_mass;
  j["final_mass"] = s.final_mass;
  j["max_mass_drift"] = s.max_mass_drift;
  j["final_energy"] = s.final_energy;
  j["wall_seconds"] = s.wall_seconds;
  return j.dump(2);
}

void write_summary(const RunSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << summary_json(s) << '\n';
}

std::string step_file(const std::string& dir, const std::string& field, int step, const std::string& ext) {
  std::ostringstream os;
  os << field << '_' << std::setw(6) << std::setfill('0') << step << '.' << ext;
  return (std::filesystem::path(dir) / os.str()).string();
}

void write_state_csv(const PoroState& state, const std::string& dir, int step) {
  write_csv(state.v, step_file(dir, "v", step, "csv"));
  write_csv(state.p, step_file(dir, "p", step, "csv"));
  MdFunction s = state.s;
  if (state.fracture_traction.size() == s.coeffs.size()) s.coeffs += state.fracture_traction;
  write_csv(s, step_file(dir, "s", step, "csv"));
  write_csv(state.q, step_file(dir, "q", step, "csv"));
  write_csv(state.u, step_file(dir, "u", step, "csv"));
}

MdFunction read_function_csv(SpacePtr space, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  MdFunction f(space);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, c);
    const int node = std::stoi(a), i = std::stoi(b);
    if (!space->is_member(node) || i < 0 || i >= space->block(node).length) {
      throw ParseError(path + ": entry (" + a + ", " + b + ") does not fit the space");
    }
    f.coeffs(space->block(node).offset + i) = std::stod(c);
  }
  return f;
}

std::string vtk_snapshot(const MdMesh& m, const MdFunction& u, const MdFunction& p, double t) {
  const MdSpace& U = *u.space;
  const MdSpace& P = *p.space;
  std::ostringstream os;
  os << std::setprecision(12);
  os << "# vtk DataFile Version 3.0\nmdpm t=" << t << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  const int nv = static_cast<int>(m.vertices.size());
  os << "POINTS " << nv << " double\n";
  for (const auto& x : m.vertices) os << x(0) << ' ' << x(1) << " 0\n";
  int nfrac = 0;
  for (const auto& [r, fm] : m.fractures) nfrac += static_cast<int>(fm.cells.size());
  const int nt = static_cast<int>(m.tris.size());
  const int ncells = nt + nfrac;
  os << "CELLS " << ncells << ' ' << 4 * nt + 3 * nfrac << '\n';
  for (const auto& tr : m.tris) os << "3 " << tr.v[0] << ' ' << tr.v[1] << ' ' << tr.v[2] << '\n';
  for (const auto& [r, fm] : m.fractures) {
    for (const auto& c : fm.cells) os << "2 " << c.v[0] << ' ' << c.v[1] << '\n';
  }
  os << "CELL_TYPES " << ncells << '\n';
  for (int i = 0; i < nt; ++i) os << "5\n";
  for (int i = 0; i < nfrac; ++i) os << "3\n";

  os << "POINT_DATA " << nv << "\nVECTORS displacement double\n";
  for (int v = 0; v < nv; ++v) {
    Vec2 avg = Vec2::Zero();
    int n = 0;
    for (int c : m.vertex_copies[v]) {
      const int owner = m.copies[c].owner;
      if (!U.is_member(owner)) continue;
      avg += Vec2(u.coeffs(U.dof(owner, c, 0)), u.coeffs(U.dof(owner, c, 1)));
      ++n;
    }
    if (n > 0) avg /= n;
    os << avg(0) << ' ' << avg(1) << " 0\n";
  }
  os << "CELL_DATA " << ncells << "\nSCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < nt; ++i) os << p.coeffs(P.dof(m.bulk_root, i)) << '\n';
  for (const auto& [r, fm] : m.fractures) {
    for (const auto& c : fm.cells) os << p.coeffs(P.dof(r, c.index)) << '\n';
  }
  return os.str();
}

void write_vtk(const MdMesh& mesh, const MdFunction& u, const MdFunction& p, double t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << vtk_snapshot(mesh, u, p, t);
}

}  // namespace mdpm
