#include "eigenrom/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "eigenrom/errors.hpp"
#include "eigenrom/pod.hpp"
#include "eigenrom/rom.hpp"

namespace eigenrom {

namespace {

using Grad = std::array<double, 2>;

Grad field_gradient(const DofMap& dm, std::span<const double> u, int cell, const TriangleGeometry& g,
                    const std::array<double, 3>& b) {
  const auto grads = shape_gradients(dm.degree, g, b);
  Grad out{0.0, 0.0};
  for (int i = 0; i < dm.dofs_per_cell(); ++i) {
    const double c = u[dm.cell_dofs[cell][i]];
    out[0] += c * grads[i][0];
    out[1] += c * grads[i][1];
  }
  return out;
}

double field_value(const DofMap& dm, std::span<const double> u, int cell, const std::array<double, 3>& b) {
  const auto vals = shape_values(dm.degree, b);
  double out = 0.0;
  for (int i = 0; i < dm.dofs_per_cell(); ++i) out += u[dm.cell_dofs[cell][i]] * vals[i];
  return out;
}

double field_l2_sq(const Mesh& mesh, const DofMap& dm, std::span<const double> u) {
  const auto& rule = quadrature::triangle_degree4();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double area = std::abs(signed_area(mesh, mesh.triangles[t]));
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double v = field_value(dm, u, static_cast<int>(t), rule.points[q]);
      total += area * rule.weights[q] * v * v;
    }
  }
  return total;
}

int local_index(const Triangle& t, int node) {
  for (int i = 0; i < 3; ++i)
    if (t[i] == node) return i;
  throw InternalError("estimate: edge endpoint not found in its triangle");
}

}  // namespace

EtaField estimate_all_dofs(const Mesh& mesh, const DofMap& dofmap, std::span<const double> all_dofs,
                           double lambda) {
  if (all_dofs.size() != dofmap.n_dof_total) throw DimensionError("estimate: field has wrong length");
  if (dofmap.cell_dofs.size() != mesh.triangles.size())
    throw DimensionError("estimate: dof map does not belong to the mesh");
  for (double v : all_dofs)
    if (!std::isfinite(v)) throw ValidationError("estimate: field has non-finite coefficients");

  const std::size_t nt = mesh.triangles.size();
  EtaField out;
  out.eta.assign(nt, 0.0);
  const double norm_sq = field_l2_sq(mesh, dofmap, all_dofs);
  if (!(norm_sq > 0.0)) return out;
  Vector u(all_dofs.begin(), all_dofs.end());
  const double scale = 1.0 / std::sqrt(norm_sq);
  for (auto& v : u) v *= scale;

  std::vector<TriangleGeometry> geo(nt);
  for (std::size_t t = 0; t < nt; ++t) geo[t] = triangle_geometry(mesh, mesh.triangles[t]);

  std::vector<double> eta_sq(nt, 0.0);
  const auto& rule = quadrature::triangle_degree4();
  for (std::size_t t = 0; t < nt; ++t) {
    const int cell = static_cast<int>(t);
    const auto lap = shape_laplacians(dofmap.degree, geo[t]);
    double lap_u = 0.0;
    for (int i = 0; i < dofmap.dofs_per_cell(); ++i) lap_u += u[dofmap.cell_dofs[t][i]] * lap[i];
    double r_sq = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double r = lap_u + lambda * field_value(dofmap, u, cell, rule.points[q]);
      r_sq += rule.weights[q] * r * r;
    }
    const double h = diameter(mesh, mesh.triangles[t]);
    eta_sq[t] = h * h * geo[t].area * r_sq;
  }

  const EdgeTable table = build_edge_table(mesh);
  const auto& line = quadrature::gauss_legendre3();
  for (std::size_t e = 0; e < table.edges.size(); ++e) {
    const auto [t1, t2] = table.edge_tris[e];
    if (t2 < 0) continue;
    const Edge& edge = table.edges[e];
    const Point& pa = mesh.nodes[edge.a];
    const Point& pb = mesh.nodes[edge.b];
    const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
    // Unit normal of the edge, with either sign: the jump squared does not care.
    const Grad n{(pb.y - pa.y) / len, -(pb.x - pa.x) / len};
    const Triangle& k1 = mesh.triangles[t1];
    const Triangle& k2 = mesh.triangles[t2];
    const int a1 = local_index(k1, edge.a), b1 = local_index(k1, edge.b);
    const int a2 = local_index(k2, edge.a), b2 = local_index(k2, edge.b);
    double jump_sq = 0.0;
    for (std::size_t q = 0; q < line.points.size(); ++q) {
      const double s = line.points[q];
      std::array<double, 3> bary1{0.0, 0.0, 0.0}, bary2{0.0, 0.0, 0.0};
      bary1[a1] = 1.0 - s;
      bary1[b1] = s;
      bary2[a2] = 1.0 - s;
      bary2[b2] = s;
      const Grad g1 = field_gradient(dofmap, u, t1, geo[t1], bary1);
      const Grad g2 = field_gradient(dofmap, u, t2, geo[t2], bary2);
      const double jump = (g1[0] - g2[0]) * n[0] + (g1[1] - g2[1]) * n[1];
      jump_sq += line.weights[q] * jump * jump;
    }
    const double contrib = 0.5 * len * len * jump_sq;  // h_e * ||R||^2_e, edge measure len
    eta_sq[t1] += contrib;
    eta_sq[t2] += contrib;
  }

  double total = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    out.eta[t] = std::sqrt(eta_sq[t]);
    total += eta_sq[t];
  }
  out.total = std::sqrt(total);
  return out;
}

EtaField estimate(const Mesh& mesh, const DiscreteField& u, double lambda) {
  if (!u.dofmap) throw ParameterError("estimate: field has no dof map");
  if (u.coefficients.size() != u.dofmap->n_free()) throw DimensionError("estimate: field has wrong length");
  const Vector all = expand_to_all_dofs(*u.dofmap, u.coefficients);
  return estimate_all_dofs(mesh, *u.dofmap, all, lambda);
}

std::vector<int> mark(const EtaField& etas, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("mark: theta must lie in (0,1]");
  const std::size_t nt = etas.eta.size();
  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return etas.eta[i] > etas.eta[j]; });
  std::vector<int> marked;
  if (theta == 1.0) {
    for (int i : order)
      if (etas.eta[i] > 0.0) marked.push_back(i);
    return marked;
  }
  double total = 0.0;
  for (int i : order) total += etas.eta[i] * etas.eta[i];
  if (!(total > 0.0)) return marked;
  // Relative slack so that theta^2 rounding does not add a triangle on ties.
  const double target = theta * theta * total * (1.0 - 1e-14);
  double partial = 0.0;
  for (int i : order) {
    if (partial >= target) break;
    partial += etas.eta[i] * etas.eta[i];
    marked.push_back(i);
  }
  return marked;
}

double exact_reference_eps(const CsrMatrix& mass, const DofMap& dofmap, std::span<const double> u_h,
                           const std::function<double(double, double)>& exact) {
  if (u_h.size() != dofmap.n_free() || mass.n_rows != dofmap.n_free())
    throw DimensionError("exact_reference_eps: sizes disagree");
  const Vector ue = interpolate_free(dofmap, exact);
  const double nh = std::sqrt(csr_quadratic_form(mass, u_h));
  const double ne = std::sqrt(csr_quadratic_form(mass, ue));
  if (!(nh > 0.0 && ne > 0.0)) throw ParameterError("exact_reference_eps: zero field");
  const double sign = csr_bilinear_form(mass, u_h, ue) < 0.0 ? -1.0 : 1.0;
  Vector d(u_h.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = u_h[i] / nh - sign * ue[i] / ne;
  return std::sqrt(csr_quadratic_form(mass, d));
}

std::vector<AdaptiveRecord> adaptive_solve(
    const Mesh& initial, const AdaptiveConfig& config,
    const std::function<void(const AdaptiveRecord&, const Mesh&)>& on_level) {
  if (config.fe_degree != 1 && config.fe_degree != 2) throw ParameterError("adaptive_solve: degree must be 1 or 2");
  if (!(config.theta > 0.0 && config.theta <= 1.0)) throw ParameterError("adaptive_solve: theta must lie in (0,1]");
  config.continuation.validate();
  validate(initial);

  std::vector<AdaptiveRecord> records;
  Mesh mesh = initial;
  for (std::size_t level = 0; level <= config.n_refinements; ++level) {
    const DofMap dm = build_dofmap(mesh, config.fe_degree);
    const Operators ops = assemble(mesh, dm);

    AdaptiveRecord rec;
    rec.level = level;
    rec.n_dof = dm.n_dof_total;
    rec.n_triangles = mesh.triangles.size();

    const FomResult fom = run_fom(ops.stiffness, ops.mass, config.continuation);
    if (!fom.trace.converged)
      throw NonConvergenceError("adaptive_solve: FOM did not converge", fom.trace.last_change);
    rec.lambda_fom = fom.trace.lambda;
    rec.fom_time = fom.trace.wall_time;
    rec.fom_converged = true;

    double eps = config.pod.eps;
    if (config.pod.exact_eigenfunction)
      eps = exact_reference_eps(ops.mass, dm, fom.trace.final_vector, config.pod.exact_eigenfunction);
    const CorrelationSpectrum spec = correlation_spectrum(fom.snapshots);
    rec.n_pod = select_dim(spec.singular_values, eps);
    rec.singular_values = spec.singular_values;
    const PodBasis pod = build_pod(fom.snapshots, rec.n_pod);

    const auto rom_start = std::chrono::steady_clock::now();
    const ReducedOperators red = reduce(ops.stiffness, ops.mass, pod.V);
    const Vector u0 = initial_state(config.continuation, dm.n_free());
    const RomResult rom = run_rom(red, u0, config.continuation);
    rec.rom_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - rom_start).count();
    rec.lambda_rom = rom.trace.lambda;
    rec.rom_converged = rom.trace.converged;

    const EtaField eta = estimate(mesh, DiscreteField{&dm, fom.trace.final_vector}, fom.trace.lambda);
    rec.eta_total = eta.total;
    records.push_back(rec);
    if (on_level) on_level(rec, mesh);

    if (level == config.n_refinements || eta.total <= 1e-14) break;
    const std::vector<int> marked = mark(eta, config.theta);
    mesh = bisect_refine(mesh, marked);
    validate(mesh);
  }
  return records;
}

}  // namespace eigenrom
