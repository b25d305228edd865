#include "mdpm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mdpm {

using nlohmann::json;

namespace {

constexpr double kFrameTol = 1e-12;
constexpr double kOrthoTol = 1e-10;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

Vec to_vec(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ParseError(where + ": expected an array of " + std::to_string(n) + " numbers");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ParseError(where + ": non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

bool frames_equal(const Frame& a, const Frame& b) {
  if (a.origin.size() != b.origin.size()) return false;
  if ((a.origin - b.origin).lpNorm<Eigen::Infinity>() > kFrameTol) return false;
  if (a.tangents.rows() != b.tangents.rows() || a.tangents.cols() != b.tangents.cols()) return false;
  if (a.tangents.size() > 0 && (a.tangents - b.tangents).lpNorm<Eigen::Infinity>() > kFrameTol) {
    return false;
  }
  if (a.normal.has_value() != b.normal.has_value()) return false;
  if (a.normal && (*a.normal - *b.normal).lpNorm<Eigen::Infinity>() > kFrameTol) return false;
  return true;
}

double polygon_area(const std::vector<Vec>& poly) {
  double a = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec& p = poly[k];
    const Vec& q = poly[(k + 1) % poly.size()];
    a += p(0) * q(1) - q(0) * p(1);
  }
  return 0.5 * a;
}

}  // namespace

const ForestNode& MdGeometry::node(int id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw GeometryError("unknown node id " + std::to_string(id));
  return it->second;
}

int MdGeometry::dag_root(int j) const {
  int cur = j;
  // Dimensions strictly decrease along parent links, so this terminates.
  for (int guard = 0; guard <= ambient_dim + 1; ++guard) {
    const ForestNode& nd = node(cur);
    if (nd.is_root()) return cur;
    cur = nd.orientation_to_parent.begin()->first;
  }
  throw GeometryError("parent chain of node " + std::to_string(j) + " does not reach a root");
}

double MdGeometry::omega(int i, int j) const {
  auto it = volume_weights.find({i, j});
  return it == volume_weights.end() ? 1.0 : it->second;
}

std::vector<int> MdGeometry::adjacent_fractures(int i) const {
  std::set<int> out;
  auto it = interface_sets.find(i);
  if (it == interface_sets.end()) return {};
  for (int j : it->second) out.insert(dag_root(j));
  return {out.begin(), out.end()};
}

std::pair<Vec, Vec> MdGeometry::segment(int root) const {
  const ForestNode& nd = node(root);
  if (nd.dim != 1) throw GeometryError("segment() requires a 1-D node, got node " + std::to_string(root));
  std::optional<Vec> a, b;
  for (int c : nd.descendants) {
    const ForestNode& ch = node(c);
    if (ch.dim != 0) continue;
    int sign = ch.orientation_to_parent.at(root);
    if (sign < 0) a = ch.frame.origin;
    else b = ch.frame.origin;
  }
  if (!a || !b) throw GeometryError("1-D node " + std::to_string(root) + " lacks two endpoint descendants");
  return {*a, *b};
}

std::vector<int> MdGeometry::descendants_with_root(int parent, int s) const {
  std::vector<int> out;
  for (int c : node(parent).descendants) {
    if (node(c).root_id == s) out.push_back(c);
  }
  return out;
}

void MdGeometry::rebuild_indices() {
  roots.clear();
  dim_index.clear();
  interface_sets.clear();
  for (auto& [id, nd] : nodes) nd.descendants.clear();
  for (auto& [id, nd] : nodes) {
    for (const auto& [pid, sign] : nd.orientation_to_parent) {
      auto it = nodes.find(pid);
      if (it != nodes.end()) it->second.descendants.push_back(id);
    }
    if (nd.is_root()) {
      roots.push_back(id);
      dim_index[nd.dim].push_back(id);
    }
  }
  for (int i : roots) {
    const int di = nodes.at(i).dim;
    if (di >= ambient_dim) continue;
    std::vector<int> js;
    for (const auto& [j, nd] : nodes) {
      if (j == i || nd.root_id != i) continue;
      int r = j;
      bool ok = true;
      for (int guard = 0; guard <= ambient_dim + 1 && ok; ++guard) {
        const ForestNode& cur = nodes.at(r);
        if (cur.is_root()) break;
        int pid = cur.orientation_to_parent.begin()->first;
        if (!nodes.count(pid)) ok = false;
        else r = pid;
      }
      if (ok && nodes.at(r).dim == di + 1) js.push_back(j);
    }
    interface_sets[i] = js;
  }
}

MdGeometry parse_geometry(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("geometry JSON: ") + e.what());
  }
  check_keys(doc, {"ambient_dim", "nodes", "weights", "boundary"}, "geometry");
  if (!doc.contains("ambient_dim") || !doc["ambient_dim"].is_number_integer()) {
    throw ParseError("geometry: missing integer 'ambient_dim'");
  }
  MdGeometry g;
  g.ambient_dim = doc["ambient_dim"].get<int>();
  const int n = g.ambient_dim;
  if (n < 1 || n > 3) throw ParseError("geometry: ambient_dim must be 1, 2 or 3");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("geometry: missing 'nodes' array");

  for (const json& jn : doc["nodes"]) {
    check_keys(jn, {"id", "root", "dim", "frame", "aperture", "parents"}, "node");
    for (const char* req : {"id", "root", "dim", "frame"}) {
      if (!jn.contains(req)) throw ParseError(std::string("node: missing '") + req + "'");
    }
    ForestNode nd;
    nd.id = jn["id"].get<int>();
    const std::string where = "node " + std::to_string(nd.id);
    nd.root_id = jn["root"].get<int>();
    nd.dim = jn["dim"].get<int>();
    if (nd.dim < 0 || nd.dim > n) throw ParseError(where + ": dim out of range");
    nd.aperture = jn.value("aperture", 1.0);
    const json& jf = jn["frame"];
    check_keys(jf, {"origin", "tangents", "normal"}, where + " frame");
    if (!jf.contains("origin")) throw ParseError(where + ": frame lacks 'origin'");
    nd.frame.origin = to_vec(jf["origin"], n, where + " origin");
    nd.frame.tangents = Mat::Zero(n, nd.dim);
    if (jf.contains("tangents")) {
      const json& jt = jf["tangents"];
      if (!jt.is_array() || static_cast<int>(jt.size()) != nd.dim) {
        throw ParseError(where + ": expected " + std::to_string(nd.dim) + " tangent columns");
      }
      for (int c = 0; c < nd.dim; ++c) nd.frame.tangents.col(c) = to_vec(jt[c], n, where + " tangent");
    } else if (nd.dim > 0) {
      throw ParseError(where + ": frame lacks 'tangents'");
    }
    if (jf.contains("normal") && !jf["normal"].is_null()) {
      nd.frame.normal = to_vec(jf["normal"], n, where + " normal");
    }
    if (jn.contains("parents")) {
      for (const json& jp : jn["parents"]) {
        check_keys(jp, {"id", "sign"}, where + " parent");
        int pid = jp.at("id").get<int>();
        int sign = jp.at("sign").get<int>();
        if (sign != 1 && sign != -1) throw ParseError(where + ": parent sign must be +1 or -1");
        if (!nd.orientation_to_parent.emplace(pid, sign).second) {
          throw ParseError(where + ": duplicate parent " + std::to_string(pid));
        }
      }
    }
    if (!g.nodes.emplace(nd.id, nd).second) throw ParseError("duplicate node id " + std::to_string(nd.id));
  }
  for (const auto& [id, nd] : g.nodes) {
    for (const auto& [pid, sign] : nd.orientation_to_parent) {
      if (!g.nodes.count(pid)) {
        throw GeometryError("node " + std::to_string(id) + " references dangling parent " + std::to_string(pid));
      }
    }
    if (!g.nodes.count(nd.root_id)) {
      throw GeometryError("node " + std::to_string(id) + " references dangling root " + std::to_string(nd.root_id));
    }
  }
  if (doc.contains("weights")) {
    for (const json& jw : doc["weights"]) {
      check_keys(jw, {"node", "source", "omega"}, "weight");
      int i = jw.at("node").get<int>();
      int j = jw.at("source").get<int>();
      if (!g.nodes.count(i) || !g.nodes.count(j)) {
        throw GeometryError("weight references dangling node (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      g.volume_weights[{i, j}] = jw.at("omega").get<double>();
    }
  }
  if (doc.contains("boundary")) {
    for (const json& jb : doc["boundary"]) g.boundary.push_back(to_vec(jb, n, "boundary vertex"));
  }
  g.rebuild_indices();
  return g;
}

MdGeometry read_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open geometry file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_geometry(ss.str());
}

MdGeometry load_geometry(const std::string& path) {
  MdGeometry g = read_geometry_file(path);
  auto report = validate(g);
  if (!report.empty()) {
    std::string msg = "geometry " + path + " is not admissible:";
    for (const auto& v : report) msg += "\n  [" + v.kind + "] " + v.message;
    throw GeometryError(msg);
  }
  return g;
}

std::vector<Violation> validate(const MdGeometry& g) {
  std::vector<Violation> out;
  auto add = [&](const std::string& kind, const std::string& msg) { out.push_back({kind, msg}); };
  const int n = g.ambient_dim;

  for (const auto& [id, nd] : g.nodes) {
    const std::string who = "node " + std::to_string(id);
    const Mat& t = nd.frame.tangents;
    if (t.cols() > 0) {
      Mat gram = t.transpose() * t;
      if ((gram - Mat::Identity(t.cols(), t.cols())).lpNorm<Eigen::Infinity>() > kOrthoTol) {
        add("frame", who + ": tangent columns are not orthonormal");
      }
    }
    if (nd.frame.normal) {
      const Vec& nv = *nd.frame.normal;
      if (std::abs(nv.norm() - 1.0) > kOrthoTol) add("frame", who + ": normal is not a unit vector");
      if (t.cols() > 0 && (t.transpose() * nv).lpNorm<Eigen::Infinity>() > kOrthoTol) {
        add("frame", who + ": normal is not orthogonal to the tangents");
      }
      if (nd.dim == n) add("frame", who + ": full-dimensional node must not carry a normal");
    } else if (nd.dim == n - 1) {
      add("frame", who + ": codimension-one node needs a normal");
    }
    if (!(nd.aperture > 0.0)) add("aperture", who + ": aperture must be positive");
    if (nd.dim == n && std::abs(nd.aperture - 1.0) > 0.0) add("aperture", who + ": full-dimensional aperture must be 1");

    if (nd.is_root()) {
      if (nd.root_id != id) add("root-id", who + ": a root must have root_id equal to its own id");
    } else {
      const ForestNode& s = g.node(nd.root_id);
      if (!s.is_root()) add("root-id", who + ": root_id " + std::to_string(nd.root_id) + " is not a root");
      if (s.dim != nd.dim) add("dimension", who + ": dimension differs from its root " + std::to_string(nd.root_id));
      std::set<int> dags;
      for (const auto& [pid, sign] : nd.orientation_to_parent) {
        const ForestNode& p = g.node(pid);
        if (p.dim != nd.dim + 1) {
          add("dimension", who + ": parent " + std::to_string(pid) + " has dim " + std::to_string(p.dim) +
                               ", expected " + std::to_string(nd.dim + 1));
        }
        dags.insert(g.dag_root(pid));
      }
      if (dags.size() > 1) add("dag", who + ": parents belong to different DAGs");
    }
  }

  // Conformity: nodes sharing a root id share the root's frame.
  for (const auto& [id, nd] : g.nodes) {
    if (nd.is_root() || !g.has_node(nd.root_id)) continue;
    if (!frames_equal(nd.frame, g.node(nd.root_id).frame)) {
      add("conformity", "node " + std::to_string(id) + " and its root " + std::to_string(nd.root_id) +
                            " reference different frames");
    }
  }

  // Covering: one skin per side of every codimension-one root, two endpoints per 1-D node.
  for (int r : g.roots) {
    const ForestNode& fr = g.node(r);
    if (fr.dim != n - 1) continue;
    std::map<int, int> side_count;
    for (const auto& [j, nd] : g.nodes) {
      if (j == r || nd.root_id != r) continue;
      int top = g.dag_root(j);
      if (g.node(top).dim != n) continue;
      for (const auto& [pid, sign] : nd.orientation_to_parent) {
        if (g.node(pid).dim == n) side_count[sign] += 1;
      }
    }
    for (int sign : {1, -1}) {
      int c = side_count.count(sign) ? side_count[sign] : 0;
      if (c != 1) {
        add("covering", "root " + std::to_string(r) + " side " + (sign > 0 ? "+" : "-") + " is claimed by " +
                            std::to_string(c) + " skins (expected 1)");
      }
    }
  }
  for (const auto& [id, nd] : g.nodes) {
    if (nd.dim != 1 || n < 2) continue;
    int minus = 0, plus = 0;
    for (int c : nd.descendants) {
      const ForestNode& ch = g.node(c);
      if (ch.dim != 0) continue;
      (ch.orientation_to_parent.at(id) < 0 ? minus : plus) += 1;
    }
    if (minus != 1 || plus != 1) {
      add("covering", "1-D node " + std::to_string(id) + " needs exactly one start and one end point, found " +
                          std::to_string(minus) + " and " + std::to_string(plus));
    }
    if (!nd.is_root() && minus == 1 && plus == 1 && g.has_node(nd.root_id) && g.node(nd.root_id).dim == 1) {
      // Skin endpoints must sit on the same 0-D roots as the fracture endpoints.
      auto ends = [&](int node_id) {
        std::map<int, int> e;
        for (int c : g.node(node_id).descendants) {
          const ForestNode& ch = g.node(c);
          if (ch.dim == 0) e[ch.orientation_to_parent.at(node_id)] = ch.root_id;
        }
        return e;
      };
      if (ends(id) != ends(nd.root_id)) {
        add("covering", "skin " + std::to_string(id) + " endpoints do not match those of root " +
                            std::to_string(nd.root_id));
      }
    }
  }

  for (const auto& [key, w] : g.volume_weights) {
    const auto [i, j] = key;
    const std::string who = "weight (" + std::to_string(i) + ", " + std::to_string(j) + ")";
    if (!(w >= 0.0) || !std::isfinite(w)) add("weights", who + ": omega must be finite and nonnegative");
    if (!g.has_node(i) || !g.has_node(j)) continue;
    if (!g.node(j).is_root() || g.node(j).dim != n - 1) add("weights", who + ": source must be a codimension-one root");
    if (!g.node(i).is_root() || g.node(i).dim >= n) add("weights", who + ": node must be a lower-dimensional root");
  }

  if (!g.boundary.empty()) {
    if (g.boundary.size() < 3) add("boundary", "boundary polygon needs at least 3 vertices");
    else if (!(polygon_area(g.boundary) > 0.0)) add("boundary", "boundary polygon must be counter-clockwise with positive area");
  }
  return out;
}

Projection project_onto_polyline(const Vec& x, const std::vector<Vec>& polyline) {
  if (polyline.empty()) throw GeometryError("projection onto an empty polyline");
  if (polyline.size() == 1) return {polyline[0], 0, 0.0};
  double best = std::numeric_limits<double>::infinity();
  Projection res;
  std::vector<std::pair<double, Projection>> cands;
  for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
    const Vec& a = polyline[k];
    const Vec d = polyline[k + 1] - a;
    const double dd = d.squaredNorm();
    double th = dd > 0.0 ? (x - a).dot(d) / dd : 0.0;
    th = std::clamp(th, 0.0, 1.0);
    Vec p = a + th * d;
    double dist = (x - p).norm();
    cands.push_back({dist, {p, static_cast<int>(k), th}});
    if (dist < best) {
      best = dist;
      res = cands.back().second;
    }
  }
  const double scale = std::max(1.0, x.norm());
  for (const auto& [dist, pr] : cands) {
    if (std::abs(dist - best) <= 1e-12 * (best + 1e-12 * scale) &&
        (pr.point - res.point).norm() > 1e-12 * scale) {
      throw ProjectionAmbiguous("closest point is not unique: two cells at equal distance " + std::to_string(best));
    }
  }
  return res;
}

Vec closest_point_projection(const Vec& x, int target, const MdGeometry& geom) {
  const ForestNode& nd = geom.node(target);
  if (nd.dim == 0) return nd.frame.origin;
  if (nd.dim == 1) {
    int r = nd.root_id;
    auto [a, b] = geom.segment(geom.node(r).dim == 1 ? r : target);
    return project_onto_polyline(x, {a, b}).point;
  }
  if (nd.dim == geom.ambient_dim && geom.ambient_dim == 2 && !geom.boundary.empty()) {
    // Inside the polygon the point is its own projection; otherwise project onto the boundary loop.
    bool inside = false;
    const auto& poly = geom.boundary;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      if (((poly[i](1) > x(1)) != (poly[j](1) > x(1))) &&
          (x(0) < (poly[j](0) - poly[i](0)) * (x(1) - poly[i](1)) / (poly[j](1) - poly[i](1)) + poly[i](0))) {
        inside = !inside;
      }
    }
    if (inside) return x;
    std::vector<Vec> loop(poly.begin(), poly.end());
    loop.push_back(poly.front());
    return project_onto_polyline(x, loop).point;
  }
  throw GeometryError("closest_point_projection: unsupported target node " + std::to_string(target));
}

std::string describe_forest(const MdGeometry& g) {
  std::ostringstream os;
  os << "ambient dimension " << g.ambient_dim << ", " << g.nodes.size() << " nodes, " << g.roots.size()
     << " roots\n";
  os << "roots:";
  for (int r : g.roots) os << ' ' << r << "(d=" << g.node(r).dim << ')';
  os << '\n';
  for (const auto& [d, ids] : g.dim_index) {
    os << "I^" << d << ":";
    for (int i : ids) os << ' ' << i;
    os << '\n';
  }
  os << "nodes:\n";
  for (const auto& [id, nd] : g.nodes) {
    os << "  " << id << ": dim " << nd.dim << ", s = " << nd.root_id << ", aperture " << nd.aperture;
    if (nd.is_root()) {
      os << ", root";
    } else {
      os << ", parents";
      for (const auto& [pid, sign] : nd.orientation_to_parent) os << ' ' << pid << (sign > 0 ? "(+)" : "(-)");
    }
    if (!nd.descendants.empty()) {
      os << ", descendants";
      for (int c : nd.descendants) os << ' ' << c;
    }
    os << '\n';
  }
  os << "interface sets:\n";
  for (const auto& [i, js] : g.interface_sets) {
    os << "  J_" << i << " = {";
    for (std::size_t k = 0; k < js.size(); ++k) os << (k ? ", " : "") << js[k];
    os << "}\n";
  }
  return os.str();
}

}  // namespace mdpm
