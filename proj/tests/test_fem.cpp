#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "eigenrom/errors.hpp"
#include "eigenrom/fem.hpp"

using namespace eigenrom;

namespace {

constexpr double kPi = 3.14159265358979323846;

double entry_sum(const CsrMatrix& k) { return std::accumulate(k.values.begin(), k.values.end(), 0.0); }

Eigen::MatrixXd to_eigen(const CsrMatrix& k) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k.n_rows, k.n_rows);
  for (std::size_t i = 0; i < k.n_rows; ++i)
    for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p) d(i, k.col_idx[p]) = k.values[p];
  return d;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("dof map sizes") {
  const Mesh cc = generate_square(SquarePattern::crisscross, 16, kPi);
  CHECK(build_dofmap(cc, 1).n_dof_total == 545);
  CHECK(build_dofmap(cc, 2).n_dof_total == 2113);
  const Mesh one = generate_square(SquarePattern::right, 1, 1.0);
  CHECK(build_dofmap(one, 1).free_dofs.empty());
  const DofMap p2 = build_dofmap(one, 2);
  REQUIRE(p2.n_free() == 1);
  const Point mid = p2.dof_coords[p2.free_dofs[0]];
  CHECK(mid.x == doctest::Approx(0.5));
  CHECK(mid.y == doctest::Approx(0.5));
  CHECK_THROWS_AS(build_dofmap(one, 3), ParameterError);
}

TEST_CASE("dof map invariants") {
  for (int degree : {1, 2}) {
    const Mesh m = generate_lshape(LShapePattern::mixed, 3);
    const DofMap dm = build_dofmap(m, degree);
    const MeshStats s = stats(m);
    CHECK(dm.n_dof_total == (degree == 1 ? s.dof_p1 : s.dof_p2));
    CHECK(std::is_sorted(dm.free_dofs.begin(), dm.free_dofs.end()));
    for (std::size_t i = 0; i < dm.n_free(); ++i) CHECK(dm.free_index[dm.free_dofs[i]] == static_cast<int>(i));
    // Dirichlet dofs are exactly those on the boundary of the L-shape.
    for (std::size_t g = 0; g < dm.n_dof_total; ++g) {
      const Point p = dm.dof_coords[g];
      const bool on = std::abs(std::abs(p.x) - 1) < 1e-12 || std::abs(std::abs(p.y) - 1) < 1e-12 ||
                      (std::abs(p.x) < 1e-12 && p.y <= 1e-12) || (std::abs(p.y) < 1e-12 && p.x >= -1e-12);
      CHECK((dm.free_index[g] < 0) == on);
    }
    // Local P2 dof 3+i is the midpoint of the edge opposite vertex i.
    if (degree == 2)
      for (std::size_t t = 0; t < m.n_triangles(); ++t)
        for (int i = 0; i < 3; ++i) {
          const auto e = local_edge(m.triangles[t], i);
          const Point q = dm.dof_coords[dm.cell_dofs[t][3 + i]];
          CHECK(q.x == doctest::Approx(0.5 * (m.nodes[e[0]].x + m.nodes[e[1]].x)));
          CHECK(q.y == doctest::Approx(0.5 * (m.nodes[e[0]].y + m.nodes[e[1]].y)));
        }
  }
}

TEST_CASE("quadrature exactness") {
  const auto& rule = quadrature::triangle_degree4();
  CHECK(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Normalized integral of b0^a b1^b b2^c over a triangle: 2 a! b! c! / (a+b+c+2)!.
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b)
      for (int c = 0; a + b + c <= 4; ++c) {
        double q = 0.0;
        for (std::size_t k = 0; k < rule.points.size(); ++k) {
          const auto& p = rule.points[k];
          q += rule.weights[k] * std::pow(p[0], a) * std::pow(p[1], b) * std::pow(p[2], c);
        }
        const double exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
        CHECK(q == doctest::Approx(exact).epsilon(1e-14));
      }
  const auto& line = quadrature::gauss_legendre3();
  for (int d = 0; d <= 5; ++d) {
    double q = 0.0;
    for (std::size_t k = 0; k < line.points.size(); ++k) q += line.weights[k] * std::pow(line.points[k], d);
    CHECK(q == doctest::Approx(1.0 / (d + 1)).epsilon(1e-14));
  }
}

TEST_CASE("shape functions") {
  const Mesh m = generate_square(SquarePattern::right, 1, 2.0);
  const TriangleGeometry g = triangle_geometry(m, m.triangles[0]);
  const std::array<double, 3> b{0.2, 0.3, 0.5};
  for (int degree : {1, 2}) {
    const int n = degree == 1 ? 3 : 6;
    const auto v = shape_values(degree, b);
    const auto gr = shape_gradients(degree, g, b);
    double sum = 0.0, gx = 0.0, gy = 0.0, lap = 0.0;
    const auto l = shape_laplacians(degree, g);
    for (int i = 0; i < n; ++i) {
      sum += v[i];
      gx += gr[i][0];
      gy += gr[i][1];
      lap += l[i];
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(std::abs(gx) < 1e-14);
    CHECK(std::abs(gy) < 1e-14);
    CHECK(std::abs(lap) < 1e-13);
  }
  // P2 nodal basis: Kronecker delta at vertices and edge midpoints.
  const std::array<std::array<double, 3>, 6> nodes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}};
  for (int j = 0; j < 6; ++j) {
    const auto v = shape_values(2, nodes[j]);
    for (int i = 0; i < 6; ++i) CHECK(v[i] == doctest::Approx(i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("partition of unity and constant kernel") {
  for (int degree : {1, 2})
    for (auto p : {SquarePattern::crisscross, SquarePattern::right}) {
      const Mesh m = generate_square(p, 6, kPi);
      const DofMap dm = build_dofmap(m, degree);
      const Operators full = assemble_full(m, dm);
      CHECK(entry_sum(full.mass) == doctest::Approx(kPi * kPi).epsilon(1e-13));
      const Vector row_sums = spmv(full.stiffness, Vector(dm.n_dof_total, 1.0));
      for (double r : row_sums) CHECK(std::abs(r) < 1e-12);
      CHECK(is_symmetric(full.stiffness));
      CHECK(is_symmetric(full.mass));
    }
}

TEST_CASE("patch tests") {
  const Mesh m = generate_lshape(LShapePattern::crisscross, 3);
  SUBCASE("P1 reproduces linear functions") {
    const DofMap dm = build_dofmap(m, 1);
    const Operators full = assemble_full(m, dm);
    const Vector u = interpolate_all(dm, [](double x, double) { return x; });
    CHECK(csr_quadratic_form(full.stiffness, u) == doctest::Approx(3.0).epsilon(1e-12));
    // int x^2 over the L-shape = 1/3 * 2 (left column) + 1/3 (top right) = 1.
    CHECK(csr_quadratic_form(full.mass, u) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("P2 reproduces quadratics") {
    const DofMap dm = build_dofmap(m, 2);
    const Operators full = assemble_full(m, dm);
    const Vector u = interpolate_all(dm, [](double x, double) { return x * x; });
    // int |d/dx x^2|^2 = 4 int x^2 = 4; int x^4 = 2/5 * 1 + 1/5 = 3/5.
    CHECK(csr_quadratic_form(full.stiffness, u) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(csr_quadratic_form(full.mass, u) == doctest::Approx(0.6).epsilon(1e-12));
    const Vector w = interpolate_all(dm, [](double x, double y) { return x * y; });
    // int |grad xy|^2 = int x^2 + y^2 = 2.
    CHECK(csr_quadratic_form(full.stiffness, w) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("P1 element matrices match the closed form") {
  Mesh m;
  m.nodes = {{0, 0}, {2, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary_node = {1, 1, 1};
  m.refinement_edge = {0};
  const DofMap dm = build_dofmap(m, 1);
  const Operators full = assemble_full(m, dm);
  const double area = 1.0;
  CHECK(full.mass.at(0, 0) == doctest::Approx(area / 6));
  CHECK(full.mass.at(0, 1) == doctest::Approx(area / 12));
  // Gradients: phi0 = 1 - x/2 - y, phi1 = x/2, phi2 = y.
  CHECK(full.stiffness.at(0, 0) == doctest::Approx(1.25));
  CHECK(full.stiffness.at(0, 1) == doctest::Approx(-0.25));
  CHECK(full.stiffness.at(0, 2) == doctest::Approx(-1.0));
  CHECK(full.stiffness.at(1, 2) == doctest::Approx(0.0));
}

TEST_CASE("assembled operators are SPD on free dofs") {
  for (int degree : {1, 2}) {
    const Mesh m = generate_square(SquarePattern::crisscross, 4, kPi);
    const DofMap dm = build_dofmap(m, degree);
    const Operators ops = assemble(m, dm);
    CHECK(ops.stiffness.n_rows == dm.n_free());
    CHECK_NOTHROW(SparseCholesky{ops.stiffness});
    CHECK_NOTHROW(SparseCholesky{ops.mass});
    for (double d : ops.mass.diagonal()) CHECK(d > 0.0);
    if (degree == 1)
      for (std::size_t i = 0; i < ops.mass.n_rows; ++i) {
        double off = 0.0;
        for (std::size_t p = ops.mass.row_ptr[i]; p < ops.mass.row_ptr[i + 1]; ++p)
          if (ops.mass.col_idx[p] != static_cast<int>(i)) off += std::abs(ops.mass.values[p]);
        CHECK(ops.mass.at(i, i) >= off * (1 - 1e-14));
      }
  }
}

TEST_CASE("assembly does not depend on triangle order") {
  Mesh m = generate_lshape(LShapePattern::crisscross, 2);
  const DofMap dm = build_dofmap(m, 2);
  const Operators ref = assemble(m, dm);
  std::vector<std::size_t> perm(m.n_triangles());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mesh p = m;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    p.triangles[i] = m.triangles[perm[i]];
    p.refinement_edge[i] = m.refinement_edge[perm[i]];
  }
  const DofMap dp = build_dofmap(p, 2);
  const Operators other = assemble(p, dp);
  // Edge numbering only depends on the edge set, so dof numbering agrees.
  REQUIRE(dp.free_dofs == dm.free_dofs);
  for (std::size_t i = 0; i < ref.mass.n_rows; ++i)
    for (std::size_t q = ref.mass.row_ptr[i]; q < ref.mass.row_ptr[i + 1]; ++q) {
      const int j = ref.mass.col_idx[q];
      CHECK(std::abs(ref.mass.values[q] - other.mass.at(i, j)) <= 1e-15);
      CHECK(std::abs(ref.stiffness.at(i, j) - other.stiffness.at(i, j)) <= 1e-15 * 8);
    }
}

TEST_CASE("smallest generalized eigenvalue against a dense oracle") {
  for (int degree : {1, 2}) {
    const Mesh m = generate_square(SquarePattern::crisscross, 4, kPi);
    const DofMap dm = build_dofmap(m, degree);
    const Operators ops = assemble(m, dm);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(ops.stiffness), to_eigen(ops.mass));
    REQUIRE(es.info() == Eigen::Success);
    const double lmin = es.eigenvalues()(0);
    CHECK(lmin > 2.0);
    CHECK(lmin < (degree == 1 ? 2.2 : 2.01));
    // Rayleigh quotients never undercut the smallest eigenvalue.
    std::mt19937_64 rng(degree);
    std::normal_distribution<double> g;
    for (int k = 0; k < 20; ++k) {
      Vector u(dm.n_free());
      for (auto& v : u) v = g(rng);
      CHECK(rayleigh_quotient(ops.stiffness, ops.mass, u) >= lmin * (1 - 1e-12));
      CHECK(rayleigh_quotient(ops.stiffness, ops.mass, u) >= 2.0);
    }
    Vector e(dm.n_free());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = es.eigenvectors()(i, 0);
    CHECK(rayleigh_quotient(ops.stiffness, ops.mass, e) == doctest::Approx(lmin).epsilon(1e-12));
    CHECK(eigen_residual(ops.stiffness, ops.mass, e, lmin) <= 1e-10);
  }
}

TEST_CASE("rayleigh quotient and residual") {
  const CsrMatrix a = csr_diagonal(Vector{2.0, 6.0});
  const CsrMatrix id = csr_identity(2);
  CHECK(rayleigh_quotient(a, id, Vector{1.0, 0.0}) == 2.0);
  CHECK(rayleigh_quotient(a, id, Vector{1.0, 1.0}) == 4.0);
  CHECK_THROWS_AS(rayleigh_quotient(a, id, Vector{0.0, 0.0}), NotSpdError);
  CHECK_THROWS_AS(eigen_residual(a, id, Vector{0.0, 0.0}, 1.0), Error);
  CHECK(eigen_residual(a, id, Vector{1.0, 0.0}, 2.0) == 0.0);

  const Mesh m = generate_square(SquarePattern::right, 5, kPi);
  const DofMap dm = build_dofmap(m, 1);
  const Operators ops = assemble(m, dm);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Vector u(dm.n_free());
  for (auto& v : u) v = g(rng);
  const double rq = rayleigh_quotient(ops.stiffness, ops.mass, u);
  const double r0 = eigen_residual(ops.stiffness, ops.mass, u, rq);
  CHECK(r0 > 0.0);
  for (double delta : {1e-3, 0.1, 1.0}) {
    const double r1 = eigen_residual(ops.stiffness, ops.mass, u, rq + delta);
    CHECK(std::abs(r1 - r0) <= delta * (1 + 1e-12));
  }
}

TEST_CASE("interpolation") {
  const Mesh m = generate_square(SquarePattern::left, 2, 1.0);
  const DofMap dm = build_dofmap(m, 2);
  const Vector all = interpolate_all(dm, [](double x, double y) { return x + 2 * y; });
  for (std::size_t g = 0; g < dm.n_dof_total; ++g)
    CHECK(all[g] == doctest::Approx(dm.dof_coords[g].x + 2 * dm.dof_coords[g].y));
  const Vector free = interpolate_free(dm, [](double x, double y) { return x + 2 * y; });
  const Vector back = expand_to_all_dofs(dm, free);
  for (std::size_t g = 0; g < dm.n_dof_total; ++g) CHECK(back[g] == (dm.free_index[g] < 0 ? 0.0 : all[g]));
  CHECK_THROWS_AS(expand_to_all_dofs(dm, Vector(dm.n_free() + 1)), DimensionError);
}

TEST_CASE("degenerate triangle fails assembly") {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {2, 0}};
  m.triangles = {{0, 1, 2}};
  m.boundary_node = {1, 1, 1};
  m.refinement_edge = {0};
  CHECK_THROWS_AS(assemble_full(m, build_dofmap(m, 1)), ValidationError);
}

}  // TEST_SUITE
