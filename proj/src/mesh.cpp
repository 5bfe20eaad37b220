#include "eigenrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "eigenrom/errors.hpp"

namespace eigenrom {

namespace {

// Collects triangles on an integer lattice (units of half a cell) and numbers
// the lattice points lexicographically by (y, x) once all cells are added.
class LatticeBuilder {
 public:
  LatticeBuilder(double x0, double y0, double half_step) : x0_(x0), y0_(y0), half_(half_step) {}

  void add(std::array<int, 2> a, std::array<int, 2> b, std::array<int, 2> c) {
    tris_.push_back({key(a), key(b), key(c)});
  }

  Mesh build() const {
    std::map<std::pair<int, int>, int> index;
    for (const auto& t : tris_)
      for (const auto& k : t) index.emplace(k, 0);
    Mesh mesh;
    mesh.nodes.reserve(index.size());
    int next = 0;
    for (auto& [k, id] : index) {
      id = next++;
      mesh.nodes.push_back({x0_ + half_ * k.second, y0_ + half_ * k.first});
    }
    mesh.triangles.reserve(tris_.size());
    for (const auto& t : tris_)
      mesh.triangles.push_back({index.at(t[0]), index.at(t[1]), index.at(t[2])});
    mesh.boundary_node = topological_boundary(mesh);
    assign_longest_refinement_edges(mesh);
    return mesh;
  }

 private:
  using Key = std::pair<int, int>;  // (iy, ix)
  static Key key(std::array<int, 2> p) { return {p[1], p[0]}; }

  double x0_, y0_, half_;
  std::vector<std::array<Key, 3>> tris_;
};

enum class CellSplit { crisscross, right, left };

// Cell with lower-left lattice corner (2i, 2j).
void add_cell(LatticeBuilder& b, int i, int j, CellSplit split) {
  const std::array<int, 2> p00{2 * i, 2 * j}, p10{2 * i + 2, 2 * j}, p11{2 * i + 2, 2 * j + 2},
      p01{2 * i, 2 * j + 2}, c{2 * i + 1, 2 * j + 1};
  switch (split) {
    case CellSplit::crisscross:
      b.add(p00, p10, c);
      b.add(p10, p11, c);
      b.add(p11, p01, c);
      b.add(p01, p00, c);
      break;
    case CellSplit::right:
      b.add(p00, p10, p11);
      b.add(p00, p11, p01);
      break;
    case CellSplit::left:
      b.add(p00, p10, p01);
      b.add(p10, p11, p01);
      break;
  }
}

double dist2(const Point& p, const Point& q) {
  const double dx = p.x - q.x, dy = p.y - q.y;
  return dx * dx + dy * dy;
}

Point midpoint(const Point& p, const Point& q) { return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}; }

// Hanging nodes leave a boundary vertex strictly inside a boundary edge.
void check_no_hanging_nodes(const Mesh& mesh, const EdgeTable& et) {
  std::vector<int> bnodes;
  std::vector<std::size_t> bedges;
  double total_len = 0.0;
  for (std::size_t e = 0; e < et.edges.size(); ++e) {
    if (et.edge_tris[e][1] >= 0) continue;
    bedges.push_back(e);
    total_len += std::sqrt(dist2(mesh.nodes[et.edges[e].a], mesh.nodes[et.edges[e].b]));
  }
  if (bedges.empty()) return;
  std::vector<std::uint8_t> on(mesh.n_nodes(), 0);
  for (auto e : bedges) on[et.edges[e].a] = on[et.edges[e].b] = 1;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) bnodes.push_back(static_cast<int>(i));

  const double cell = total_len / static_cast<double>(bedges.size());
  auto cell_of = [cell](double v) { return static_cast<long long>(std::floor(v / cell)); };
  auto hkey = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<int>> grid;
  for (int v : bnodes) grid[hkey(cell_of(mesh.nodes[v].x), cell_of(mesh.nodes[v].y))].push_back(v);

  for (auto e : bedges) {
    const auto [a, b] = et.edges[e];
    const Point& p = mesh.nodes[a];
    const Point& q = mesh.nodes[b];
    const double len2 = dist2(p, q);
    for (long long cx = cell_of(std::min(p.x, q.x)); cx <= cell_of(std::max(p.x, q.x)); ++cx) {
      for (long long cy = cell_of(std::min(p.y, q.y)); cy <= cell_of(std::max(p.y, q.y)); ++cy) {
        auto it = grid.find(hkey(cx, cy));
        if (it == grid.end()) continue;
        for (int v : it->second) {
          if (v == a || v == b) continue;
          const Point& r = mesh.nodes[v];
          const double cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
          const double t = ((r.x - p.x) * (q.x - p.x) + (r.y - p.y) * (q.y - p.y)) / len2;
          if (std::abs(cross) <= 1e-12 * len2 && t > 1e-12 && t < 1.0 - 1e-12) {
            std::ostringstream os;
            os << "non-conforming mesh: node " << v << " hangs on edge (" << a << "," << b << ")";
            throw ValidationError(os.str());
          }
        }
      }
    }
  }
}

}  // namespace

std::string to_string(SquarePattern p) {
  switch (p) {
    case SquarePattern::crisscross: return "crisscross";
    case SquarePattern::right: return "right";
    case SquarePattern::left: return "left";
  }
  return "?";
}

std::string to_string(LShapePattern p) {
  return p == LShapePattern::crisscross ? "crisscross" : "mixed";
}

double signed_area(const Mesh& mesh, const Triangle& t) {
  const Point& a = mesh.nodes[t[0]];
  const Point& b = mesh.nodes[t[1]];
  const Point& c = mesh.nodes[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double diameter(const Mesh& mesh, const Triangle& t) {
  double d = 0.0;
  for (int e = 0; e < 3; ++e) {
    const auto [u, v] = local_edge(t, e);
    d = std::max(d, dist2(mesh.nodes[u], mesh.nodes[v]));
  }
  return std::sqrt(d);
}

EdgeTable build_edge_table(const Mesh& mesh) {
  struct Entry {
    Edge edge;
    int tri;
    int local;
  };
  std::vector<Entry> all;
  all.reserve(3 * mesh.n_triangles());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
    for (int e = 0; e < 3; ++e) {
      const auto [u, v] = local_edge(mesh.triangles[t], e);
      all.push_back({make_edge(u, v), static_cast<int>(t), e});
    }
  std::sort(all.begin(), all.end(), [](const Entry& l, const Entry& r) {
    if (l.edge != r.edge) return l.edge < r.edge;
    return l.tri < r.tri;
  });

  EdgeTable et;
  et.tri_edges.assign(mesh.n_triangles(), {-1, -1, -1});
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].edge == all[i].edge) ++j;
    if (j - i > 2) {
      std::ostringstream os;
      os << "edge (" << all[i].edge.a << "," << all[i].edge.b << ") is shared by " << (j - i)
         << " triangles";
      throw ValidationError(os.str());
    }
    const int id = static_cast<int>(et.edges.size());
    et.edges.push_back(all[i].edge);
    et.edge_tris.push_back({all[i].tri, j - i == 2 ? all[i + 1].tri : -1});
    for (std::size_t k = i; k < j; ++k) et.tri_edges[all[k].tri][all[k].local] = id;
    i = j;
  }
  return et;
}

std::vector<std::uint8_t> topological_boundary(const Mesh& mesh) {
  const EdgeTable et = build_edge_table(mesh);
  std::vector<std::uint8_t> flags(mesh.n_nodes(), 0);
  for (std::size_t e = 0; e < et.edges.size(); ++e)
    if (et.edge_tris[e][1] < 0) flags[et.edges[e].a] = flags[et.edges[e].b] = 1;
  return flags;
}

void assign_longest_refinement_edges(Mesh& mesh) {
  mesh.refinement_edge.assign(mesh.n_triangles(), 0);
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    int best = 0;
    double best_len = -1.0;
    for (int e = 0; e < 3; ++e) {
      const auto [u, v] = local_edge(tri, e);
      const double len = dist2(mesh.nodes[u], mesh.nodes[v]);
      if (len > best_len * (1.0 + 1e-12)) {
        best = e;
        best_len = len;
      }
    }
    mesh.refinement_edge[t] = static_cast<std::uint8_t>(best);
  }
}

void validate(const Mesh& mesh) {
  const auto n = static_cast<int>(mesh.n_nodes());
  if (mesh.boundary_node.size() != mesh.n_nodes())
    throw ValidationError("boundary flag count does not match node count");
  if (mesh.refinement_edge.size() != mesh.n_triangles())
    throw ValidationError("refinement edge count does not match triangle count");
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= n) {
        std::ostringstream os;
        os << "triangle " << t << " references invalid node " << v;
        throw ValidationError(os.str());
      }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(signed_area(mesh, tri) > 0.0)) {
      std::ostringstream os;
      os << "triangle " << t << " is degenerate or clockwise (area " << signed_area(mesh, tri) << ")";
      throw ValidationError(os.str());
    }
    if (mesh.refinement_edge[t] > 2) throw ValidationError("refinement edge index out of range");
  }
  const EdgeTable et = build_edge_table(mesh);
  // Two triangles on an interior edge must traverse it in opposite directions.
  for (std::size_t e = 0; e < et.edges.size(); ++e) {
    if (et.edge_tris[e][1] < 0) continue;
    auto direction = [&](int t) {
      for (int le = 0; le < 3; ++le)
        if (et.tri_edges[t][le] == static_cast<int>(e)) return local_edge(mesh.triangles[t], le)[0];
      return -1;
    };
    if (direction(et.edge_tris[e][0]) == direction(et.edge_tris[e][1]))
      throw ValidationError("inconsistent orientation across an interior edge");
  }
  check_no_hanging_nodes(mesh, et);
  std::vector<std::uint8_t> flags(mesh.n_nodes(), 0);
  std::vector<std::uint8_t> used(mesh.n_nodes(), 0);
  for (std::size_t e = 0; e < et.edges.size(); ++e)
    if (et.edge_tris[e][1] < 0) flags[et.edges[e].a] = flags[et.edges[e].b] = 1;
  for (const auto& tri : mesh.triangles)
    for (int v : tri) used[v] = 1;
  for (int i = 0; i < n; ++i) {
    if (!used[i]) throw ValidationError("node " + std::to_string(i) + " is not used by any triangle");
    if ((flags[i] != 0) != (mesh.boundary_node[i] != 0))
      throw ValidationError("boundary flag of node " + std::to_string(i) + " is inconsistent");
  }
}

MeshStats stats(const Mesh& mesh) {
  MeshStats s;
  s.n_nodes = mesh.n_nodes();
  s.n_triangles = mesh.n_triangles();
  s.n_boundary_nodes = static_cast<std::size_t>(
      std::count_if(mesh.boundary_node.begin(), mesh.boundary_node.end(), [](auto f) { return f != 0; }));
  s.n_edges = build_edge_table(mesh).edges.size();
  for (const auto& t : mesh.triangles) s.h_max = std::max(s.h_max, diameter(mesh, t));
  s.dof_p1 = s.n_nodes;
  s.dof_p2 = s.n_nodes + s.n_edges;
  return s;
}

Mesh generate_square(SquarePattern pattern, int n, double side) {
  if (n < 1) throw ParameterError("square mesh needs n >= 1, got " + std::to_string(n));
  if (!(side > 0.0) || !std::isfinite(side)) throw ParameterError("square side length must be positive");
  const CellSplit split = pattern == SquarePattern::crisscross ? CellSplit::crisscross
                          : pattern == SquarePattern::right    ? CellSplit::right
                                                               : CellSplit::left;
  LatticeBuilder b(0.0, 0.0, side / (2.0 * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) add_cell(b, i, j, split);
  return b.build();
}

Mesh generate_lshape(LShapePattern pattern, int n) {
  if (n < 1) throw ParameterError("L-shape mesh needs n >= 1, got " + std::to_string(n));
  // Unit squares: [-1,0]x[-1,0], [-1,0]x[0,1], [0,1]x[0,1].
  struct Block {
    int i0, j0;
    CellSplit mixed_split;
  };
  const std::array<Block, 3> blocks{{{0, 0, CellSplit::right}, {0, n, CellSplit::left}, {n, n, CellSplit::right}}};
  LatticeBuilder b(-1.0, -1.0, 1.0 / (2.0 * n));
  for (int j = 0; j < 2 * n; ++j)
    for (int i = 0; i < 2 * n; ++i)
      for (const auto& blk : blocks)
        if (i >= blk.i0 && i < blk.i0 + n && j >= blk.j0 && j < blk.j0 + n)
          add_cell(b, i, j, pattern == LShapePattern::crisscross ? CellSplit::crisscross : blk.mixed_split);
  return b.build();
}

Mesh uniform_refine(const Mesh& mesh) {
  const EdgeTable et = build_edge_table(mesh);
  Mesh out;
  const int n0 = static_cast<int>(mesh.n_nodes());
  out.nodes = mesh.nodes;
  out.boundary_node = mesh.boundary_node;
  out.nodes.reserve(mesh.n_nodes() + et.edges.size());
  for (std::size_t e = 0; e < et.edges.size(); ++e) {
    out.nodes.push_back(midpoint(mesh.nodes[et.edges[e].a], mesh.nodes[et.edges[e].b]));
    out.boundary_node.push_back(et.edge_tris[e][1] < 0 ? 1 : 0);
  }
  out.triangles.reserve(4 * mesh.n_triangles());
  out.refinement_edge.reserve(4 * mesh.n_triangles());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const Triangle& v = mesh.triangles[t];
    const int m0 = n0 + et.tri_edges[t][0];
    const int m1 = n0 + et.tri_edges[t][1];
    const int m2 = n0 + et.tri_edges[t][2];
    // Children are homothetic to the parent with matching local vertex order,
    // so the parent's refinement edge index carries over unchanged.
    for (const Triangle& c : {Triangle{v[0], m2, m1}, Triangle{m2, v[1], m0}, Triangle{m1, m0, v[2]},
                              Triangle{m0, m1, m2}}) {
      out.triangles.push_back(c);
      out.refinement_edge.push_back(mesh.refinement_edge[t]);
    }
  }
  return out;
}

Mesh bisect_refine(const Mesh& mesh, std::span<const int> marked) {
  const auto n_tri = static_cast<int>(mesh.n_triangles());
  for (int t : marked)
    if (t < 0 || t >= n_tri) throw ParameterError("marked triangle index out of range: " + std::to_string(t));
  if (marked.empty()) return mesh;

  const EdgeTable et = build_edge_table(mesh);
  std::vector<std::uint8_t> edge_marked(et.edges.size(), 0);
  std::vector<int> queue;
  for (int t : marked) {
    const int e = et.tri_edges[t][mesh.refinement_edge[t]];
    if (!edge_marked[e]) {
      edge_marked[e] = 1;
      for (int nb : et.edge_tris[e])
        if (nb >= 0) queue.push_back(nb);
    }
  }
  // Closure: any triangle with a marked edge must also have its refinement edge marked.
  const std::size_t max_steps = static_cast<std::size_t>(n_tri) * 64;
  std::size_t steps = 0;
  while (!queue.empty()) {
    if (++steps > max_steps) throw InternalError("bisection closure did not terminate");
    const int t = queue.back();
    queue.pop_back();
    const int ref = et.tri_edges[t][mesh.refinement_edge[t]];
    if (edge_marked[ref]) continue;
    const auto& te = et.tri_edges[t];
    if (edge_marked[te[0]] || edge_marked[te[1]] || edge_marked[te[2]]) {
      edge_marked[ref] = 1;
      for (int nb : et.edge_tris[ref])
        if (nb >= 0 && nb != t) queue.push_back(nb);
    }
  }

  Mesh out;
  out.nodes = mesh.nodes;
  out.boundary_node = mesh.boundary_node;
  std::vector<int> mid(et.edges.size(), -1);
  for (std::size_t e = 0; e < et.edges.size(); ++e) {
    if (!edge_marked[e]) continue;
    mid[e] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(midpoint(mesh.nodes[et.edges[e].a], mesh.nodes[et.edges[e].b]));
    out.boundary_node.push_back(et.edge_tris[e][1] < 0 ? 1 : 0);
  }
  std::map<Edge, int> edge_id;
  for (std::size_t e = 0; e < et.edges.size(); ++e)
    if (edge_marked[e]) edge_id.emplace(et.edges[e], static_cast<int>(e));
  auto midpoint_of = [&](int u, int v) {
    auto it = edge_id.find(make_edge(u, v));
    return it == edge_id.end() ? -1 : mid[it->second];
  };

  // Triangle stored rotated so that (p0, p1) is the refinement edge and p2 the newest vertex.
  struct Oriented {
    int p0, p1, p2;
  };
  auto emit = [&out](const Oriented& o) {
    // Local vertex 2 is the newest one, so the refinement edge is local edge 2.
    out.triangles.push_back({o.p0, o.p1, o.p2});
    out.refinement_edge.push_back(2);
  };
  auto bisect = [&](auto&& self, const Oriented& o, int depth) -> void {
    const int m = midpoint_of(o.p0, o.p1);
    if (m < 0 || depth > 2) {
      emit(o);
      return;
    }
    // Children (p0, m, p2) and (m, p1, p2); each one's refinement edge is the
    // parent edge opposite m, i.e. (p2, p0) and (p1, p2).
    self(self, Oriented{o.p2, o.p0, m}, depth + 1);
    self(self, Oriented{o.p1, o.p2, m}, depth + 1);
  };
  for (int t = 0; t < n_tri; ++t) {
    const Triangle& v = mesh.triangles[t];
    const int r = mesh.refinement_edge[t];
    const Oriented o{v[(r + 1) % 3], v[(r + 2) % 3], v[r]};
    if (!edge_marked[et.tri_edges[t][r]]) {
      out.triangles.push_back(v);
      out.refinement_edge.push_back(mesh.refinement_edge[t]);
      continue;
    }
    bisect(bisect, o, 0);
  }
  return out;
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open mesh file for writing: " + path.string());
  os.precision(17);
  os << "nodes " << mesh.n_nodes() << '\n';
  for (const auto& p : mesh.nodes) os << p.x << ' ' << p.y << '\n';
  os << "triangles " << mesh.n_triangles() << '\n';
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  std::size_t nb = 0;
  for (auto f : mesh.boundary_node) nb += f ? 1 : 0;
  os << "boundary " << nb << '\n';
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i)
    if (mesh.boundary_node[i]) os << i << '\n';
  if (!os) throw IoError("failed writing mesh file: " + path.string());
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mesh file: " + path.string());
  const std::string where = path.string() + ": ";
  auto expect_section = [&](const std::string& name) -> long long {
    std::string tag;
    long long count = -1;
    if (!(is >> tag) || tag != name || !(is >> count) || count < 0)
      throw ValidationError(where + "expected '" + name + " <count>' section");
    return count;
  };
  Mesh mesh;
  const long long nn = expect_section("nodes");
  mesh.nodes.resize(static_cast<std::size_t>(nn));
  for (auto& p : mesh.nodes)
    if (!(is >> p.x >> p.y) || !std::isfinite(p.x) || !std::isfinite(p.y))
      throw ValidationError(where + "malformed node coordinates");
  const long long nt = expect_section("triangles");
  mesh.triangles.resize(static_cast<std::size_t>(nt));
  for (auto& t : mesh.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw ValidationError(where + "malformed triangle record");
    for (int v : t)
      if (v < 0 || v >= nn) throw ValidationError(where + "triangle references invalid node " + std::to_string(v));
  }
  // Clockwise input (common from external generators) is reoriented; zero
  // area is rejected by validate().
  for (auto& t : mesh.triangles)
    if (signed_area(mesh, t) < 0.0) std::swap(t[1], t[2]);

  std::string tag;
  std::vector<std::uint8_t> stored;
  if (is >> tag) {
    if (tag != "boundary") throw ValidationError(where + "unexpected section '" + tag + "'");
    long long nb = -1;
    if (!(is >> nb) || nb < 0) throw ValidationError(where + "malformed boundary section");
    stored.assign(mesh.nodes.size(), 0);
    for (long long i = 0; i < nb; ++i) {
      long long v = -1;
      if (!(is >> v) || v < 0 || v >= nn) throw ValidationError(where + "malformed boundary node index");
      stored[static_cast<std::size_t>(v)] = 1;
    }
    if (is >> tag) throw ValidationError(where + "trailing content after boundary section");
  }
  mesh.boundary_node = topological_boundary(mesh);
  if (!stored.empty() && stored != mesh.boundary_node)
    throw ValidationError(where + "stored boundary flags disagree with mesh topology");
  assign_longest_refinement_edges(mesh);
  validate(mesh);
  return mesh;
}

}  // namespace eigenrom
