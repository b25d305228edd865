#include "mdpm/spaces.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mdpm {

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Density: return "density";
    case SpaceKind::Flux: return "flux";
    case SpaceKind::Vector: return "vector";
    case SpaceKind::Strain: return "strain";
    case SpaceKind::Tensor: return "tensor";
    case SpaceKind::Extended: return "extended";
  }
  return "?";
}

const Block& MdSpace::block(int node) const {
  auto it = blocks.find(node);
  if (it == blocks.end()) {
    throw SpaceError("node " + std::to_string(node) + " is not in the " + to_string(kind) + " forest");
  }
  return it->second;
}

int MdSpace::dof(int node, int entity, int comp) const {
  auto it = entity_offset.find({node, entity});
  if (it == entity_offset.end()) {
    throw SpaceError("no entity " + std::to_string(entity) + " on node " + std::to_string(node) + " in the " +
                     to_string(kind) + " space");
  }
  return it->second + comp;
}

int MdSpace::local_order(int node) const {
  const MdGeometry& g = *mesh->geom;
  return g.node(g.dag_root(node)).dim - (g.ambient_dim - k);
}

std::vector<int> k_forest(const MdGeometry& g, int k) {
  const int n = g.ambient_dim;
  std::vector<int> out;
  for (const auto& [j, nd] : g.nodes) {
    const int di = g.node(g.dag_root(j)).dim;
    if (di >= n - k && di - nd.dim <= n - k) out.push_back(j);
  }
  return out;
}

namespace {

double edge_distance(const MdMesh& m, int tri, const MeshEdge& e) {
  return std::abs((m.tris[tri].centroid - e.midpoint).dot(e.normal));
}

struct Builder {
  MdSpace& s;
  void open(int node, int comps) {
    Block b;
    b.node = node;
    b.offset = static_cast<int>(s.dofs.size());
    b.comps = comps;
    s.blocks[node] = b;
  }
  void add(int node, int entity, double w, int comps, const double* cw = nullptr) {
    s.entity_offset[{node, entity}] = static_cast<int>(s.dofs.size());
    for (int c = 0; c < comps; ++c) {
      s.dofs.push_back({node, entity, c});
      wts.push_back(w * (cw ? cw[c] : 1.0));
    }
    s.blocks[node].length += comps;
  }
  std::vector<double> wts;
};

}  // namespace

SpacePtr build_space(std::shared_ptr<const MdMesh> mesh, int k, int p) {
  const int n = mesh->geom->ambient_dim;
  if (k == n && p == 1) return build_space(mesh, SpaceKind::Density);
  if (k == n - 1 && p == 1) return build_space(mesh, SpaceKind::Flux);
  if (k == 0 && p == n) return build_space(mesh, SpaceKind::Vector);
  if (k == 1 && p == n) return build_space(mesh, SpaceKind::Strain);
  throw SpaceError("unsupported (k, p) pair (" + std::to_string(k) + ", " + std::to_string(p) + ")");
}

SpacePtr build_space(std::shared_ptr<const MdMesh> mp, SpaceKind kind) {
  const MdMesh& m = *mp;
  const MdGeometry& g = *m.geom;
  const int n = g.ambient_dim;
  auto sp = std::make_shared<MdSpace>();
  MdSpace& s = *sp;
  s.kind = kind;
  s.mesh = mp;
  switch (kind) {
    case SpaceKind::Density: s.k = n; s.p = 1; break;
    case SpaceKind::Flux: s.k = n - 1; s.p = 1; break;
    case SpaceKind::Vector: s.k = 0; s.p = n; break;
    case SpaceKind::Strain:
    case SpaceKind::Tensor: s.k = 1; s.p = n; break;
    case SpaceKind::Extended: s.k = 0; s.p = n; break;
  }
  if (kind == SpaceKind::Extended) {
    for (const auto& [j, nd] : g.nodes) s.member_nodes.push_back(j);
  } else {
    s.member_nodes = k_forest(g, s.k);
  }
  Builder b{s, {}};

  // Lumped vertex masses: bulk share, skin shares and point nodes.
  std::vector<double> copy_mass;
  if (kind == SpaceKind::Vector || kind == SpaceKind::Extended) {
    copy_mass.assign(m.copies.size(), 0.0);
    for (const auto& t : m.tris) {
      for (int a = 0; a < 3; ++a) copy_mass[t.copy[a]] += t.area / 3.0;
    }
    for (const auto& [r, fm] : m.fractures) {
      for (const auto& c : fm.cells) {
        for (int e = 0; e < 2; ++e) {
          copy_mass[c.copy_plus[e]] += 0.5 * c.length;
          copy_mass[c.copy_minus[e]] += 0.5 * c.length;
        }
      }
    }
    for (std::size_t c = 0; c < m.copies.size(); ++c) {
      if (g.node(m.copies[c].owner).dim == 0) copy_mass[c] += 1.0;
    }
  }

  for (int j : s.member_nodes) {
    const ForestNode& nd = g.node(j);
    const bool is_bulk = nd.is_root() && nd.dim == n;
    const bool is_frac = nd.is_root() && nd.dim == n - 1;
    const bool is_point_root = nd.is_root() && nd.dim == 0;
    const bool is_skin = m.skin_side.count(j) > 0;
    switch (kind) {
      case SpaceKind::Density: {
        b.open(j, 1);
        if (is_bulk) {
          for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) b.add(j, t, m.tris[t].area, 1);
        } else if (is_frac) {
          for (const auto& c : m.fracture(j).cells) b.add(j, c.index, c.length, 1);
        } else if (is_point_root) {
          b.add(j, 0, 1.0, 1);
        }
        break;
      }
      case SpaceKind::Flux: {
        b.open(j, 1);
        if (is_bulk) {
          for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
            const MeshEdge& ed = m.edges[e];
            if (ed.kind == EdgeKind::fracture) continue;
            double d = edge_distance(m, ed.tri_minus, ed);
            if (ed.kind == EdgeKind::interior) d += edge_distance(m, ed.tri_plus, ed);
            b.add(j, e, ed.length * d, 1);
          }
        } else if (is_frac) {
          const auto& fm = m.fracture(j);
          for (std::size_t v = 1; v + 1 < fm.vertices.size(); ++v) {
            double d = 0.5 * (fm.cells[v - 1].length + fm.cells[v].length);
            b.add(j, static_cast<int>(v), d, 1);
          }
        } else if (is_skin) {
          const auto [r, side] = m.skin_side.at(j);
          const auto& fm = m.fracture(r);
          for (const auto& c : fm.cells) {
            int t = side > 0 ? c.tri_plus : c.tri_minus;
            double d = edge_distance(m, t, m.edges[c.edge]) + 0.5 * fm.aperture;
            b.add(j, c.index, c.length * d, 1);
          }
        } else if (nd.dim == n - 2 && g.node(g.dag_root(j)).dim == n - 1) {
          const auto& fm = m.fracture(g.dag_root(j));
          const auto& c = (j == fm.start_node) ? fm.cells.front() : fm.cells.back();
          b.add(j, 0, 0.5 * c.length, 1);
        }
        break;
      }
      case SpaceKind::Vector: {
        b.open(j, n);
        for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
          if (m.copies[c].owner == j) b.add(j, c, copy_mass[c], n);
        }
        break;
      }
      case SpaceKind::Strain:
      case SpaceKind::Tensor: {
        const bool full = kind == SpaceKind::Tensor;
        if (is_bulk) {
          const double sym_w[3] = {1.0, 1.0, 2.0};
          const int comps = full ? n * n : 3;
          b.open(j, comps);
          for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) b.add(j, t, m.tris[t].area, comps, full ? nullptr : sym_w);
        } else if (is_skin) {
          const int comps = full ? n : 1;
          b.open(j, comps);
          for (const auto& c : m.fracture(m.skin_side.at(j).first).cells) b.add(j, c.index, c.length, comps);
        } else if (is_frac) {
          b.open(j, n);
          for (const auto& c : m.fracture(j).cells) b.add(j, c.index, c.length, n);
        } else {
          b.open(j, 1);  // void: lower-dimensional members carry no strain
        }
        break;
      }
      case SpaceKind::Extended: {
        b.open(j, n);
        if (g.dag_root(j) == m.bulk_root) {
          for (int c = 0; c < static_cast<int>(m.copies.size()); ++c) {
            if (m.copies[c].owner == j) b.add(j, c, copy_mass[c], n);
          }
        } else if (is_frac) {
          const auto& fm = m.fracture(j);
          for (std::size_t v = 1; v + 1 < fm.vertices.size(); ++v) b.add(j, static_cast<int>(v), 1.0, n);
        } else if (nd.dim == 0) {
          b.add(j, 0, 1.0, n);
        }
        break;
      }
    }
  }
  s.weights = Eigen::Map<Vec>(b.wts.data(), static_cast<Eigen::Index>(b.wts.size()));
  for (int i = 0; i < s.weights.size(); ++i) {
    if (!(s.weights(i) > 0.0)) throw SpaceError(std::string("non-positive mass weight in the ") + to_string(kind) + " space");
  }
  return sp;
}

MdFunction::MdFunction(SpacePtr s, Vec c) : space(std::move(s)), coeffs(std::move(c)) {
  if (coeffs.size() != space->size()) throw SpaceError("coefficient length does not match the space layout");
}

Eigen::VectorBlock<Vec> MdFunction::restrict(int node) {
  const Block& b = space->block(node);
  return coeffs.segment(b.offset, b.length);
}

Eigen::VectorBlock<const Vec> MdFunction::restrict(int node) const {
  const Block& b = space->block(node);
  return coeffs.segment(b.offset, b.length);
}

namespace {
void require_same(const MdFunction& a, const MdFunction& b) {
  if (a.space != b.space) throw SpaceError("functions live in different spaces");
}
}  // namespace

MdFunction operator+(const MdFunction& a, const MdFunction& b) {
  require_same(a, b);
  return MdFunction(a.space, a.coeffs + b.coeffs);
}

MdFunction operator-(const MdFunction& a, const MdFunction& b) {
  require_same(a, b);
  return MdFunction(a.space, a.coeffs - b.coeffs);
}

MdFunction operator*(double s, const MdFunction& a) { return MdFunction(a.space, s * a.coeffs); }

double weighted_dot(const MdSpace& space, const Vec& a, const Vec& b) {
  return (a.array() * space.weights.array() * b.array()).sum();
}

double inner_product(const MdFunction& a, const MdFunction& b) {
  require_same(a, b);
  return weighted_dot(*a.space, a.coeffs, b.coeffs);
}

double norm(const MdFunction& a) { return std::sqrt(inner_product(a, a)); }

std::string to_csv(const MdFunction& f) {
  std::ostringstream os;
  os << "node,local_index,value\n" << std::setprecision(17);
  for (const auto& [node, b] : f.space->blocks) {
    for (int i = 0; i < b.length; ++i) os << node << ',' << i << ',' << f.coeffs(b.offset + i) << '\n';
  }
  return os.str();
}

void write_csv(const MdFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_csv(f);
}

}  // namespace mdpm
