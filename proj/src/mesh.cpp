#include "mdpm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mdpm {

namespace {

constexpr double kSnap = 1e-9;

// Smallest cell count >= len/h for which every breakpoint falls on a grid line.
int grid_count(double lo, double hi, double h, const std::vector<double>& breaks) {
  const double len = hi - lo;
  int start = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
  for (int m = start; m <= 64 * start; ++m) {
    const double d = len / m;
    bool ok = true;
    for (double b : breaks) {
      double s = (b - lo) / d;
      if (std::abs(s - std::round(s)) > kSnap * std::max(1.0, s)) {
        ok = false;
        break;
      }
    }
    if (ok) return m;
  }
  throw MeshError("cannot align the grid with the fracture endpoints for h = " + std::to_string(h));
}

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

bool on_segment(const Vec2& x, const Vec2& a, const Vec2& b, double tol) {
  Vec2 d = b - a;
  double len = d.norm();
  Vec2 r = x - a;
  double cross = d(0) * r(1) - d(1) * r(0);
  if (std::abs(cross) > tol * len) return false;
  double t = r.dot(d) / (len * len);
  return t >= -tol && t <= 1.0 + tol;
}

}  // namespace

int MdMesh::num_boundary_edges() const {
  return static_cast<int>(std::count_if(edges.begin(), edges.end(),
                                        [](const MeshEdge& e) { return e.kind == EdgeKind::boundary; }));
}

double MdMesh::max_cell_diameter() const {
  double d = 0.0;
  for (const auto& t : tris) {
    for (int a = 0; a < 3; ++a) d = std::max(d, (vertices[t.v[a]] - vertices[t.v[(a + 1) % 3]]).norm());
  }
  return d;
}

MdMesh build_mesh(const MdGeometry& geom, double h) {
  return build_mesh(std::make_shared<const MdGeometry>(geom), h);
}

MdMesh build_mesh(std::shared_ptr<const MdGeometry> gp, double h) {
  if (!(h > 0.0)) throw MeshError("mesh size must be positive");
  const MdGeometry& g = *gp;
  if (g.ambient_dim != 2) throw MeshError("meshing is implemented for ambient dimension 2 only");
  if (g.boundary.size() != 4) throw MeshError("the boundary must be an axis-aligned rectangle");
  MdMesh m;
  m.geom = gp;
  m.h = h;

  auto bulk = g.dim_index.count(2) ? g.dim_index.at(2) : std::vector<int>{};
  if (bulk.size() != 1) throw MeshError("exactly one full-dimensional root is supported");
  m.bulk_root = bulk.front();

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec& p : g.boundary) {
    x0 = std::min(x0, p(0));
    x1 = std::max(x1, p(0));
    y0 = std::min(y0, p(1));
    y1 = std::max(y1, p(1));
  }
  for (const Vec& p : g.boundary) {
    bool cx = std::abs(p(0) - x0) < kSnap || std::abs(p(0) - x1) < kSnap;
    bool cy = std::abs(p(1) - y0) < kSnap || std::abs(p(1) - y1) < kSnap;
    if (!cx || !cy) throw MeshError("the boundary must be an axis-aligned rectangle");
  }
  if (!(x1 - x0 > 0.0) || !(y1 - y0 > 0.0)) throw MeshError("degenerate boundary polygon");

  std::vector<int> frac_roots = g.dim_index.count(1) ? g.dim_index.at(1) : std::vector<int>{};
  std::vector<double> bx, by;
  std::map<int, std::pair<Vec2, Vec2>> segs;
  for (int r : frac_roots) {
    auto [a, b] = g.segment(r);
    Vec2 A = a.head<2>(), B = b.head<2>();
    bool horiz = std::abs(A(1) - B(1)) < kSnap;
    bool vert = std::abs(A(0) - B(0)) < kSnap;
    if (!horiz && !vert) throw MeshError("fracture " + std::to_string(r) + " is not aligned with the grid axes");
    for (const Vec2& p : {A, B}) {
      if (p(0) <= x0 + kSnap || p(0) >= x1 - kSnap || p(1) <= y0 + kSnap || p(1) >= y1 - kSnap) {
        throw MeshError("fracture " + std::to_string(r) + " must lie strictly inside the boundary");
      }
      bx.push_back(p(0));
      by.push_back(p(1));
    }
    segs[r] = {A, B};
  }
  m.nx = grid_count(x0, x1, h, bx);
  m.ny = grid_count(y0, y1, h, by);
  const double dx = (x1 - x0) / m.nx, dy = (y1 - y0) / m.ny;
  auto vid = [&](int i, int j) { return j * (m.nx + 1) + i; };
  for (int j = 0; j <= m.ny; ++j) {
    for (int i = 0; i <= m.nx; ++i) m.vertices.emplace_back(x0 + i * dx, y0 + j * dy);
  }
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      BulkTriangle t1, t2;
      t1.v = {a, b, c};
      t2.v = {a, c, d};
      m.tris.push_back(t1);
      m.tris.push_back(t2);
    }
  }
  for (auto& t : m.tris) {
    const Vec2 &p0 = m.vertices[t.v[0]], &p1 = m.vertices[t.v[1]], &p2 = m.vertices[t.v[2]];
    Eigen::Matrix2d J;
    J.col(0) = p1 - p0;
    J.col(1) = p2 - p0;
    t.area = 0.5 * J.determinant();
    if (!(t.area > 0.0)) throw MeshError("non-positive triangle area");
    t.centroid = (p0 + p1 + p2) / 3.0;
    Eigen::Matrix2d Jit = J.inverse().transpose();
    Vec2 g1 = Jit.col(0), g2 = Jit.col(1);
    t.grad.row(0) = -(g1 + g2).transpose();
    t.grad.row(1) = g1.transpose();
    t.grad.row(2) = g2.transpose();
  }

  // Edges.
  std::map<std::pair<int, int>, int> edge_of;
  for (int ti = 0; ti < static_cast<int>(m.tris.size()); ++ti) {
    auto& t = m.tris[ti];
    for (int k = 0; k < 3; ++k) {
      int a = t.v[k], b = t.v[(k + 1) % 3];
      auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        MeshEdge e;
        e.v = {key.first, key.second};
        e.tri_minus = ti;
        e.length = (m.vertices[a] - m.vertices[b]).norm();
        e.midpoint = 0.5 * (m.vertices[a] + m.vertices[b]);
        Vec2 d = m.vertices[e.v[1]] - m.vertices[e.v[0]];
        Vec2 nrm(d(1), -d(0));
        nrm.normalize();
        if (nrm.dot(e.midpoint - t.centroid) < 0) nrm = -nrm;  // away from tri_minus
        e.normal = nrm;
        it = edge_of.emplace(key, static_cast<int>(m.edges.size())).first;
        m.edges.push_back(e);
      } else {
        m.edges[it->second].tri_plus = ti;
      }
      t.edge[k] = it->second;
    }
  }
  for (auto& e : m.edges) {
    if (e.tri_plus < 0) {
      e.kind = EdgeKind::boundary;
      for (std::size_t k = 0; k < g.boundary.size(); ++k) {
        Vec2 a = g.boundary[k].head<2>(), b = g.boundary[(k + 1) % g.boundary.size()].head<2>();
        if (on_segment(e.midpoint, a, b, 1e-9)) {
          e.boundary_index = static_cast<int>(k);
          break;
        }
      }
      if (e.boundary_index < 0) throw MeshError("boundary edge not on the boundary polygon");
      continue;
    }
    for (const auto& [r, ab] : segs) {
      if (on_segment(m.vertices[e.v[0]], ab.first, ab.second, 1e-9) &&
          on_segment(m.vertices[e.v[1]], ab.first, ab.second, 1e-9)) {
        if (e.kind == EdgeKind::fracture) throw MeshError("overlapping fractures");
        e.kind = EdgeKind::fracture;
        e.fracture_root = r;
      }
    }
  }

  // Fracture cells, ordered along the tangent.
  for (int r : frac_roots) {
    FractureMesh fm;
    fm.root = r;
    const ForestNode& fr = g.node(r);
    fm.aperture = fr.aperture;
    fm.tangent = fr.frame.tangents.col(0).head<2>();
    fm.normal = fr.frame.normal->head<2>();
    auto [A, B] = segs[r];
    if ((B - A).dot(fm.tangent) <= 0.0) throw MeshError("fracture " + std::to_string(r) + " endpoints disagree with its tangent");
    for (int c : fr.descendants) {
      const ForestNode& ch = g.node(c);
      if (ch.dim != 0) continue;
      if (ch.orientation_to_parent.at(r) < 0) {
        fm.start_node = c;
        fm.start_root = ch.root_id;
      } else {
        fm.end_node = c;
        fm.end_root = ch.root_id;
      }
    }
    for (const auto& [j, nd] : g.nodes) {
      if (nd.root_id != r || j == r) continue;
      auto it = nd.orientation_to_parent.find(m.bulk_root);
      if (it == nd.orientation_to_parent.end()) continue;
      (it->second > 0 ? fm.skin_plus : fm.skin_minus) = j;
      m.skin_side[j] = {r, it->second};
    }
    if (!fm.skin_plus || !fm.skin_minus) throw MeshError("fracture " + std::to_string(r) + " lacks a skin on each side");
    std::vector<std::pair<double, int>> order;
    for (int ei = 0; ei < static_cast<int>(m.edges.size()); ++ei) {
      if (m.edges[ei].fracture_root == r) order.push_back({(m.edges[ei].midpoint - A).dot(fm.tangent), ei});
    }
    std::sort(order.begin(), order.end());
    for (auto [s, ei] : order) {
      MeshEdge& e = m.edges[ei];
      FractureCell cell;
      cell.index = static_cast<int>(fm.cells.size());
      cell.edge = ei;
      int a = e.v[0], b = e.v[1];
      if ((m.vertices[b] - m.vertices[a]).dot(fm.tangent) < 0) std::swap(a, b);
      cell.v = {a, b};
      cell.length = e.length;
      cell.midpoint = e.midpoint;
      int t0 = e.tri_minus, t1 = e.tri_plus;
      if ((m.tris[t0].centroid - e.midpoint).dot(fm.normal) > 0) std::swap(t0, t1);
      cell.tri_minus = t0;
      cell.tri_plus = t1;
      e.fracture_cell = cell.index;
      fm.cells.push_back(cell);
    }
    if (fm.cells.empty()) throw MeshError("fracture " + std::to_string(r) + " has no cells");
    fm.vertices.push_back(fm.cells.front().v[0]);
    for (std::size_t c = 0; c < fm.cells.size(); ++c) {
      if (c > 0 && fm.cells[c].v[0] != fm.cells[c - 1].v[1]) throw MeshError("fracture cells are not contiguous");
      fm.vertices.push_back(fm.cells[c].v[1]);
    }
    m.fractures[r] = fm;
  }

  // 0-D roots sit on grid vertices.
  auto nearest_vertex = [&](const Vec2& x) {
    int i = static_cast<int>(std::lround((x(0) - x0) / dx));
    int j = static_cast<int>(std::lround((x(1) - y0) / dy));
    int v = vid(i, j);
    if ((m.vertices[v] - x).norm() > 1e-9) throw MeshError("point node does not fall on a grid vertex");
    return v;
  };
  if (g.dim_index.count(0)) {
    for (int i : g.dim_index.at(0)) {
      PointCell pc;
      pc.node = i;
      pc.x = g.node(i).frame.origin.head<2>();
      pc.vertex = nearest_vertex(pc.x);
      m.points[i] = pc;
    }
  }
  std::map<int, int> point_at_vertex;
  for (const auto& [i, pc] : m.points) point_at_vertex[pc.vertex] = i;

  // Vertex copies: one per sector of triangles connected through non-fracture edges.
  const int nv = static_cast<int>(m.vertices.size());
  std::vector<std::vector<int>> vtris(nv);
  for (int ti = 0; ti < static_cast<int>(m.tris.size()); ++ti) {
    for (int a = 0; a < 3; ++a) vtris[m.tris[ti].v[a]].push_back(ti);
  }
  std::vector<VertexCopy> raw;
  std::map<std::pair<int, int>, int> raw_of;  // (vertex, tri) -> raw copy
  for (int v = 0; v < nv; ++v) {
    const auto& ts = vtris[v];
    Dsu dsu(static_cast<int>(ts.size()));
    std::vector<int> frac_edges;
    for (std::size_t a = 0; a < ts.size(); ++a) {
      for (int ei : m.tris[ts[a]].edge) {
        const MeshEdge& e = m.edges[ei];
        if (e.v[0] != v && e.v[1] != v) continue;
        if (e.kind == EdgeKind::fracture) {
          frac_edges.push_back(ei);
          continue;
        }
        if (e.kind != EdgeKind::interior) continue;
        int other = e.tri_minus == ts[a] ? e.tri_plus : e.tri_minus;
        auto it = std::find(ts.begin(), ts.end(), other);
        dsu.unite(static_cast<int>(a), static_cast<int>(it - ts.begin()));
      }
    }
    std::sort(frac_edges.begin(), frac_edges.end());
    frac_edges.erase(std::unique(frac_edges.begin(), frac_edges.end()), frac_edges.end());
    std::map<int, std::vector<int>> sectors;
    for (std::size_t a = 0; a < ts.size(); ++a) sectors[dsu.find(static_cast<int>(a))].push_back(ts[a]);
    for (auto& [rep, st] : sectors) {
      VertexCopy cp;
      cp.vertex = v;
      cp.tris = st;
      if (frac_edges.empty()) {
        cp.owner = m.bulk_root;
      } else {
        // Skins bounding this sector: fracture edges at v adjacent to one of its triangles.
        std::set<int> skins;
        for (int ei : frac_edges) {
          const MeshEdge& e = m.edges[ei];
          const FractureMesh& fm = m.fractures.at(e.fracture_root);
          const FractureCell& fc = fm.cells[e.fracture_cell];
          for (int t : st) {
            if (t == fc.tri_plus) skins.insert(fm.skin_plus);
            if (t == fc.tri_minus) skins.insert(fm.skin_minus);
          }
        }
        auto pit = point_at_vertex.find(v);
        if (pit == point_at_vertex.end()) {
          if (skins.size() != 1) throw MeshError("fracture vertex without a point node is bounded by several skins");
          cp.owner = *skins.begin();
        } else {
          int owner = 0;
          for (const auto& [k, nd] : g.nodes) {
            if (nd.dim != 0 || nd.root_id != pit->second || g.dag_root(k) != m.bulk_root || k == m.bulk_root) continue;
            std::set<int> parents;
            for (const auto& [pid, sign] : nd.orientation_to_parent) parents.insert(pid);
            if (parents == skins) owner = k;
          }
          if (!owner) throw MeshError("no bulk point node matches the sector at point " + std::to_string(pit->second));
          cp.owner = owner;
        }
      }
      raw.push_back(cp);
    }
  }
  std::vector<int> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return raw[a].owner != raw[b].owner ? raw[a].owner < raw[b].owner : raw[a].vertex < raw[b].vertex;
  });
  m.vertex_copies.assign(nv, {});
  for (int k : order) {
    int id = static_cast<int>(m.copies.size());
    m.copies.push_back(raw[k]);
    m.vertex_copies[raw[k].vertex].push_back(id);
    for (int t : raw[k].tris) {
      auto& tri = m.tris[t];
      for (int a = 0; a < 3; ++a) {
        if (tri.v[a] == raw[k].vertex) tri.copy[a] = id;
      }
    }
  }
  auto copy_in_tri = [&](int t, int v) {
    const auto& tri = m.tris[t];
    for (int a = 0; a < 3; ++a) {
      if (tri.v[a] == v) return tri.copy[a];
    }
    throw MeshError("vertex not in triangle");
  };
  for (auto& [r, fm] : m.fractures) {
    for (auto& c : fm.cells) {
      for (int s = 0; s < 2; ++s) {
        c.copy_plus[s] = copy_in_tri(c.tri_plus, c.v[s]);
        c.copy_minus[s] = copy_in_tri(c.tri_minus, c.v[s]);
      }
    }
    if (point_at_vertex.count(fm.vertices.front()) == 0 || point_at_vertex.at(fm.vertices.front()) != fm.start_root ||
        point_at_vertex.count(fm.vertices.back()) == 0 || point_at_vertex.at(fm.vertices.back()) != fm.end_root) {
      throw MeshError("fracture " + std::to_string(r) + " endpoints do not match its point nodes");
    }
  }
  return m;
}

}  // namespace mdpm
