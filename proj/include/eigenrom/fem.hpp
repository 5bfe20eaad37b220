#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "eigenrom/linalg.hpp"
#include "eigenrom/mesh.hpp"

namespace eigenrom {

/// Degrees of freedom of a continuous P1 or P2 Lagrange space.
///
/// Vertex dofs come first, numbered as the mesh nodes; P2 edge dofs follow in
/// the order of the sorted edge table. Local P2 dofs are the three vertices,
/// then the midpoints of the edges opposite vertex 0, 1 and 2.
struct DofMap {
  int degree = 1;
  std::size_t n_dof_total = 0;
  std::vector<int> free_dofs;              // sorted global indices of non-Dirichlet dofs
  std::vector<int> free_index;             // global dof -> position in free_dofs, or -1
  std::vector<std::array<int, 6>> cell_dofs;  // first 3 (P1) or 6 (P2) entries used
  std::vector<Point> dof_coords;           // coordinates of every global dof

  std::size_t n_free() const { return free_dofs.size(); }
  int dofs_per_cell() const { return degree == 1 ? 3 : 6; }
};

DofMap build_dofmap(const Mesh& mesh, int degree);

/// Coefficients of a finite element function over the free dofs; Dirichlet
/// dofs are zero.
struct DiscreteField {
  const DofMap* dofmap = nullptr;
  Vector coefficients;
};

/// Scatters free-dof coefficients into a vector over all dofs.
Vector expand_to_all_dofs(const DofMap& dofmap, std::span<const double> free_values);

struct Operators {
  CsrMatrix stiffness;  // A
  CsrMatrix mass;       // M
};

/// Stiffness and mass matrices restricted to the free dofs (Dirichlet
/// elimination on the whole boundary).
Operators assemble(const Mesh& mesh, const DofMap& dofmap);

/// Stiffness and mass matrices over every dof, before elimination.
Operators assemble_full(const Mesh& mesh, const DofMap& dofmap);

/// Nodal interpolant of f at every dof.
Vector interpolate_all(const DofMap& dofmap, const std::function<double(double, double)>& f);
/// Nodal interpolant of f at the free dofs.
Vector interpolate_free(const DofMap& dofmap, const std::function<double(double, double)>& f);

double rayleigh_quotient(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u);

/// ||A u - lambda M u|| / ||M u||
double eigen_residual(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u, double lambda);

namespace quadrature {

/// Triangle rule in barycentric coordinates; weights sum to one (multiply by the area).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// Symmetric 6-point rule, exact for polynomials of degree 4.
const TriangleRule& triangle_degree4();

/// Gauss-Legendre rule on [0,1], weights sum to one.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const LineRule& gauss_legendre3();

}  // namespace quadrature

/// Geometry of one triangle: area and barycentric gradients.
struct TriangleGeometry {
  double area = 0.0;
  std::array<std::array<double, 2>, 3> grad_bary{};
};

TriangleGeometry triangle_geometry(const Mesh& mesh, const Triangle& t);

/// Values of the local basis functions at barycentric point `b`.
std::array<double, 6> shape_values(int degree, const std::array<double, 3>& b);
/// Gradients of the local basis functions at barycentric point `b`.
std::array<std::array<double, 2>, 6> shape_gradients(int degree, const TriangleGeometry& g,
                                                     const std::array<double, 3>& b);
/// Laplacians of the local basis functions (constant per triangle).
std::array<double, 6> shape_laplacians(int degree, const TriangleGeometry& g);

}  // namespace eigenrom
