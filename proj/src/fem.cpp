#include "eigenrom/fem.hpp"

#include <algorithm>
#include <cmath>

#include "eigenrom/errors.hpp"

namespace eigenrom {

namespace quadrature {

const TriangleRule& triangle_degree4() {
  static const TriangleRule rule = [] {
    const double r = std::sqrt(38.0 - 44.0 * std::sqrt(0.4));
    const double a = (8.0 - std::sqrt(10.0) + r) / 18.0;
    const double b = (8.0 - std::sqrt(10.0) - r) / 18.0;
    const double q = std::sqrt(213125.0 - 53320.0 * std::sqrt(10.0));
    const double wa = (620.0 + q) / 3720.0;
    const double wb = (620.0 - q) / 3720.0;
    TriangleRule tr;
    tr.points = {{a, a, 1.0 - 2.0 * a}, {a, 1.0 - 2.0 * a, a}, {1.0 - 2.0 * a, a, a},
                 {b, b, 1.0 - 2.0 * b}, {b, 1.0 - 2.0 * b, b}, {1.0 - 2.0 * b, b, b}};
    tr.weights = {wa, wa, wa, wb, wb, wb};
    return tr;
  }();
  return rule;
}

const LineRule& gauss_legendre3() {
  static const LineRule rule = [] {
    const double d = 0.5 * std::sqrt(0.6);
    return LineRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
  }();
  return rule;
}

}  // namespace quadrature

TriangleGeometry triangle_geometry(const Mesh& mesh, const Triangle& t) {
  TriangleGeometry g;
  g.area = signed_area(mesh, t);
  if (!(g.area > 0.0)) throw ValidationError("degenerate triangle during assembly");
  const double inv = 1.0 / (2.0 * g.area);
  for (int i = 0; i < 3; ++i) {
    const Point& pj = mesh.nodes[t[(i + 1) % 3]];
    const Point& pk = mesh.nodes[t[(i + 2) % 3]];
    g.grad_bary[i] = {(pj.y - pk.y) * inv, (pk.x - pj.x) * inv};
  }
  return g;
}

std::array<double, 6> shape_values(int degree, const std::array<double, 3>& b) {
  std::array<double, 6> v{};
  if (degree == 1) {
    v[0] = b[0];
    v[1] = b[1];
    v[2] = b[2];
    return v;
  }
  for (int i = 0; i < 3; ++i) {
    v[i] = b[i] * (2.0 * b[i] - 1.0);
    v[3 + i] = 4.0 * b[(i + 1) % 3] * b[(i + 2) % 3];
  }
  return v;
}

std::array<std::array<double, 2>, 6> shape_gradients(int degree, const TriangleGeometry& g,
                                                     const std::array<double, 3>& b) {
  std::array<std::array<double, 2>, 6> d{};
  const auto& gl = g.grad_bary;
  if (degree == 1) {
    for (int i = 0; i < 3; ++i) d[i] = gl[i];
    return d;
  }
  for (int i = 0; i < 3; ++i) {
    const double s = 4.0 * b[i] - 1.0;
    d[i] = {s * gl[i][0], s * gl[i][1]};
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    d[3 + i] = {4.0 * (b[k] * gl[j][0] + b[j] * gl[k][0]), 4.0 * (b[k] * gl[j][1] + b[j] * gl[k][1])};
  }
  return d;
}

std::array<double, 6> shape_laplacians(int degree, const TriangleGeometry& g) {
  std::array<double, 6> l{};
  if (degree == 1) return l;
  const auto& gl = g.grad_bary;
  auto dotg = [&gl](int i, int j) { return gl[i][0] * gl[j][0] + gl[i][1] * gl[j][1]; };
  for (int i = 0; i < 3; ++i) {
    l[i] = 4.0 * dotg(i, i);
    l[3 + i] = 8.0 * dotg((i + 1) % 3, (i + 2) % 3);
  }
  return l;
}

DofMap build_dofmap(const Mesh& mesh, int degree) {
  if (degree != 1 && degree != 2) throw ParameterError("finite element degree must be 1 or 2");
  const int nn = static_cast<int>(mesh.n_nodes());
  DofMap dm;
  dm.degree = degree;
  dm.cell_dofs.resize(mesh.n_triangles());
  dm.dof_coords = mesh.nodes;
  std::vector<std::uint8_t> dirichlet(mesh.boundary_node.begin(), mesh.boundary_node.end());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    dm.cell_dofs[t].fill(-1);
    for (int i = 0; i < 3; ++i) dm.cell_dofs[t][i] = mesh.triangles[t][i];
  }
  if (degree == 2) {
    const EdgeTable et = build_edge_table(mesh);
    for (std::size_t e = 0; e < et.edges.size(); ++e) {
      const Point& p = mesh.nodes[et.edges[e].a];
      const Point& q = mesh.nodes[et.edges[e].b];
      dm.dof_coords.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
      dirichlet.push_back(et.edge_tris[e][1] < 0 ? 1 : 0);
    }
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
      for (int i = 0; i < 3; ++i) dm.cell_dofs[t][3 + i] = nn + et.tri_edges[t][i];
  }
  dm.n_dof_total = dm.dof_coords.size();
  dm.free_index.assign(dm.n_dof_total, -1);
  for (std::size_t i = 0; i < dm.n_dof_total; ++i) {
    if (dirichlet[i]) continue;
    dm.free_index[i] = static_cast<int>(dm.free_dofs.size());
    dm.free_dofs.push_back(static_cast<int>(i));
  }
  return dm;
}

Vector expand_to_all_dofs(const DofMap& dofmap, std::span<const double> free_values) {
  if (free_values.size() != dofmap.n_free()) throw DimensionError("field length does not match free dof count");
  Vector all(dofmap.n_dof_total, 0.0);
  for (std::size_t i = 0; i < dofmap.n_free(); ++i) all[static_cast<std::size_t>(dofmap.free_dofs[i])] = free_values[i];
  return all;
}

namespace {

struct LocalMatrices {
  std::array<std::array<double, 6>, 6> stiffness{};
  std::array<std::array<double, 6>, 6> mass{};
};

LocalMatrices element_matrices(int degree, const TriangleGeometry& g) {
  LocalMatrices lm;
  if (degree == 1) {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const double k = g.area * (g.grad_bary[i][0] * g.grad_bary[j][0] + g.grad_bary[i][1] * g.grad_bary[j][1]);
        const double m = g.area / 12.0 * (i == j ? 2.0 : 1.0);
        lm.stiffness[i][j] = lm.stiffness[j][i] = k;
        lm.mass[i][j] = lm.mass[j][i] = m;
      }
    return lm;
  }
  const auto& rule = quadrature::triangle_degree4();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double w = rule.weights[q] * g.area;
    const auto phi = shape_values(2, rule.points[q]);
    const auto dphi = shape_gradients(2, g, rule.points[q]);
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) {
        lm.stiffness[i][j] += w * (dphi[i][0] * dphi[j][0] + dphi[i][1] * dphi[j][1]);
        lm.mass[i][j] += w * phi[i] * phi[j];
      }
  }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) {
      lm.stiffness[i][j] = lm.stiffness[j][i];
      lm.mass[i][j] = lm.mass[j][i];
    }
  return lm;
}

struct PairTriplet {
  int row;
  int col;
  double a;
  double m;
};

// Row-bucketed stable assembly: entries are summed in element order.
Operators build_operators(std::size_t n, std::vector<PairTriplet>& trips) {
  std::vector<std::size_t> count(n + 1, 0);
  for (const auto& t : trips) ++count[static_cast<std::size_t>(t.row) + 1];
  for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
  std::vector<PairTriplet> sorted(trips.size());
  {
    std::vector<std::size_t> pos(count.begin(), count.end() - 1);
    for (const auto& t : trips) sorted[pos[static_cast<std::size_t>(t.row)]++] = t;
  }
  trips.clear();
  trips.shrink_to_fit();

  Operators ops;
  for (CsrMatrix* m : {&ops.stiffness, &ops.mass}) {
    m->n_rows = n;
    m->row_ptr.assign(n + 1, 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = sorted.begin() + static_cast<std::ptrdiff_t>(count[i]);
    auto last = sorted.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
    std::stable_sort(first, last, [](const PairTriplet& l, const PairTriplet& r) { return l.col < r.col; });
    for (auto it = first; it != last;) {
      auto jt = it;
      double sa = 0.0, sm = 0.0;
      while (jt != last && jt->col == it->col) {
        sa += jt->a;
        sm += jt->m;
        ++jt;
      }
      ops.stiffness.col_idx.push_back(it->col);
      ops.stiffness.values.push_back(sa);
      ops.mass.col_idx.push_back(it->col);
      ops.mass.values.push_back(sm);
      it = jt;
    }
    ops.stiffness.row_ptr[i + 1] = ops.stiffness.col_idx.size();
    ops.mass.row_ptr[i + 1] = ops.mass.col_idx.size();
  }
  return ops;
}

Operators assemble_impl(const Mesh& mesh, const DofMap& dofmap, bool eliminate) {
  if (dofmap.cell_dofs.size() != mesh.n_triangles()) throw DimensionError("dof map does not belong to this mesh");
  const int nloc = dofmap.dofs_per_cell();
  std::vector<PairTriplet> trips;
  trips.reserve(mesh.n_triangles() * static_cast<std::size_t>(nloc * nloc));
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const TriangleGeometry g = triangle_geometry(mesh, mesh.triangles[t]);
    const LocalMatrices lm = element_matrices(dofmap.degree, g);
    const auto& dofs = dofmap.cell_dofs[t];
    for (int i = 0; i < nloc; ++i) {
      const int gi = eliminate ? dofmap.free_index[static_cast<std::size_t>(dofs[i])] : dofs[i];
      if (gi < 0) continue;
      for (int j = 0; j < nloc; ++j) {
        const int gj = eliminate ? dofmap.free_index[static_cast<std::size_t>(dofs[j])] : dofs[j];
        if (gj < 0) continue;
        trips.push_back({gi, gj, lm.stiffness[i][j], lm.mass[i][j]});
      }
    }
  }
  return build_operators(eliminate ? dofmap.n_free() : dofmap.n_dof_total, trips);
}

}  // namespace

Operators assemble(const Mesh& mesh, const DofMap& dofmap) { return assemble_impl(mesh, dofmap, true); }

Operators assemble_full(const Mesh& mesh, const DofMap& dofmap) { return assemble_impl(mesh, dofmap, false); }

Vector interpolate_all(const DofMap& dofmap, const std::function<double(double, double)>& f) {
  Vector v(dofmap.n_dof_total);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(dofmap.dof_coords[i].x, dofmap.dof_coords[i].y);
  return v;
}

Vector interpolate_free(const DofMap& dofmap, const std::function<double(double, double)>& f) {
  Vector v(dofmap.n_free());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = dofmap.dof_coords[static_cast<std::size_t>(dofmap.free_dofs[i])];
    v[i] = f(p.x, p.y);
  }
  return v;
}

double rayleigh_quotient(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u) {
  const double den = csr_quadratic_form(m, u);
  if (!(den > 0.0)) throw NotSpdError("Rayleigh quotient: u^T M u is not positive (zero vector or M not SPD)");
  return csr_quadratic_form(a, u) / den;
}

double eigen_residual(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u, double lambda) {
  const Vector au = spmv(a, u);
  const Vector mu = spmv(m, u);
  const double mnorm = norm2(mu);
  if (!(mnorm > 0.0)) throw ParameterError("eigen_residual: zero vector");
  double s = 0.0;
  for (std::size_t i = 0; i < au.size(); ++i) {
    const double r = au[i] - lambda * mu[i];
    s += r * r;
  }
  return std::sqrt(s) / mnorm;
}

}  // namespace eigenrom
