#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "eigenrom/errors.hpp"
#include "eigenrom/linalg.hpp"

namespace eigenrom {

struct SparseCholesky::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> solver;
  std::size_t n = 0;
};

SparseCholesky::SparseCholesky(const CsrMatrix& k) : impl_(std::make_unique<Impl>()) {
  impl_->n = k.n_rows;
  const auto n = static_cast<Eigen::Index>(k.n_rows);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(k.nnz());
  for (std::size_t i = 0; i < k.n_rows; ++i)
    for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p)
      if (k.col_idx[p] <= static_cast<int>(i)) trips.emplace_back(static_cast<int>(i), k.col_idx[p], k.values[p]);
  Eigen::SparseMatrix<double> lower(n, n);
  lower.setFromTriplets(trips.begin(), trips.end());
  impl_->solver.compute(lower);
  if (impl_->solver.info() != Eigen::Success) throw NotSpdError("sparse Cholesky factorization failed");
  const auto d = impl_->solver.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0)) throw NotSpdError("sparse Cholesky: matrix is not positive definite");
}

SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

Vector SparseCholesky::solve(std::span<const double> b) const {
  if (b.size() != impl_->n) throw DimensionError("sparse Cholesky solve: right-hand side has wrong size");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::VectorXd x = impl_->solver.solve(rhs);
  return Vector(x.data(), x.data() + x.size());
}

}  // namespace eigenrom
