#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eigenrom {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Vertex indices of a triangle, counterclockwise.
using Triangle = std::array<int, 3>;

/// Conforming triangulation of a polygonal domain.
///
/// Local edge i of a triangle is the edge opposite local vertex i. The
/// refinement edge of each triangle is stored as such a local index and
/// drives newest-vertex bisection: the vertex opposite it is the newest one.
struct Mesh {
  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<std::uint8_t> boundary_node;    // 1 if the node lies on the boundary
  std::vector<std::uint8_t> refinement_edge;  // local edge index 0..2

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_triangles() const { return triangles.size(); }
};

struct MeshStats {
  std::size_t n_nodes = 0;
  std::size_t n_triangles = 0;
  std::size_t n_boundary_nodes = 0;
  std::size_t n_edges = 0;
  double h_max = 0.0;
  std::size_t dof_p1 = 0;
  std::size_t dof_p2 = 0;
};

enum class SquarePattern { crisscross, right, left };
enum class LShapePattern { crisscross, mixed };

/// Edge as a sorted vertex pair.
struct Edge {
  int a = 0;
  int b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

/// Vertices of local edge `e` (opposite local vertex e), in CCW order.
inline std::array<int, 2> local_edge(const Triangle& t, int e) {
  return {t[(e + 1) % 3], t[(e + 2) % 3]};
}

/// Unique edges of a mesh with their adjacency.
struct EdgeTable {
  std::vector<Edge> edges;                     // sorted lexicographically
  std::vector<std::array<int, 3>> tri_edges;   // per-triangle global edge index of local edge i
  std::vector<std::array<int, 2>> edge_tris;   // adjacent triangles; second is -1 on the boundary
};

/// Builds the edge table. Throws ValidationError if an edge is shared by
/// more than two triangles.
EdgeTable build_edge_table(const Mesh& mesh);

double signed_area(const Mesh& mesh, const Triangle& t);
double diameter(const Mesh& mesh, const Triangle& t);

/// Checks every Mesh invariant (positive areas, valid indices, conformity,
/// boundary flags consistent with topology). Throws ValidationError.
void validate(const Mesh& mesh);

MeshStats stats(const Mesh& mesh);

/// Structured mesh of (0, side)^2 with n cells per side.
Mesh generate_square(SquarePattern pattern, int n, double side);

/// Structured mesh of (-1,1)^2 \ [0,1]x[-1,0] with n cells per unit side.
Mesh generate_lshape(LShapePattern pattern, int n);

/// Red refinement: every triangle split into four by its edge midpoints.
Mesh uniform_refine(const Mesh& mesh);

/// Newest-vertex bisection of the marked triangles plus conforming closure.
Mesh bisect_refine(const Mesh& mesh, std::span<const int> marked);

/// Picks the longest edge of each triangle as its refinement edge
/// (ties broken by lowest local index).
void assign_longest_refinement_edges(Mesh& mesh);

/// Recomputes boundary flags from topology: a node is on the boundary iff it
/// belongs to an edge with only one adjacent triangle.
std::vector<std::uint8_t> topological_boundary(const Mesh& mesh);

void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh(const std::filesystem::path& path);

std::string to_string(SquarePattern p);
std::string to_string(LShapePattern p);

}  // namespace eigenrom
