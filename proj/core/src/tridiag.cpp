#include "terracelab/tridiag.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace terracelab {

TridiagSolver::TridiagSolver(std::vector<double> lower, std::vector<double> diag,
                             std::vector<double> upper)
    : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
  const std::size_t n = diag_.size();
  if (n == 0 || lower_.size() != n || upper_.size() != n)
    throw std::invalid_argument("TridiagSolver: band sizes disagree");

  // Thomas elimination; keep the modified superdiagonal and reciprocal pivots.
  pivot_inv_.resize(n);
  double piv = diag_[0];
  if (piv == 0.0 || !std::isfinite(piv))
    throw std::runtime_error("TridiagSolver: zero pivot in row 0");
  pivot_inv_[0] = 1.0 / piv;
  for (std::size_t i = 1; i < n; ++i) {
    upper_[i - 1] *= pivot_inv_[i - 1];
    piv = diag_[i] - lower_[i] * upper_[i - 1];
    if (piv == 0.0 || !std::isfinite(piv))
      throw std::runtime_error("TridiagSolver: zero pivot");
    pivot_inv_[i] = 1.0 / piv;
  }
}

void TridiagSolver::solve(const std::vector<double>& rhs, std::vector<double>& x) const {
  const std::size_t n = diag_.size();
  if (rhs.size() != n) throw std::invalid_argument("TridiagSolver: rhs size");
  x.resize(n);
  x[0] = rhs[0] * pivot_inv_[0];
  for (std::size_t i = 1; i < n; ++i)
    x[i] = (rhs[i] - lower_[i] * x[i - 1]) * pivot_inv_[i];
  for (std::size_t i = n - 1; i-- > 0;)
    x[i] -= upper_[i] * x[i + 1];
}

std::vector<double> TridiagSolver::solve(const std::vector<double>& rhs) const {
  std::vector<double> x;
  solve(rhs, x);
  return x;
}

CyclicTridiagSolver::CyclicTridiagSolver(std::vector<double> lower,
                                         std::vector<double> diag,
                                         std::vector<double> upper,
                                         double corner_first, double corner_last)
    : n_(diag.size()), corner_first_(corner_first), corner_last_(corner_last) {
  if (n_ < 3)
    throw std::invalid_argument("CyclicTridiagSolver: need at least 3 unknowns");

  // A = T + u v^T with u = (gamma, 0, .., 0, corner_last)^T and
  // v = (1, 0, .., 0, corner_first/gamma)^T. T absorbs the compensating
  // diagonal shifts so the Sherman-Morrison update restores the corners.
  gamma_ = -diag[0];
  if (gamma_ == 0.0) gamma_ = 1.0;
  std::vector<double> d = std::move(diag);
  d[0] -= gamma_;
  d[n_ - 1] -= corner_first_ * corner_last_ / gamma_;
  base_ = TridiagSolver(std::move(lower), std::move(d), std::move(upper));

  std::vector<double> u(n_, 0.0);
  u[0] = gamma_;
  u[n_ - 1] = corner_last_;
  z_ = base_.solve(u);
  const double denom = 1.0 + z_[0] + corner_first_ * z_[n_ - 1] / gamma_;
  if (denom == 0.0 || !std::isfinite(denom))
    throw std::runtime_error("CyclicTridiagSolver: singular rank-one update");
  // Fold the denominator into z once; solve() then only needs an axpy.
  for (double& zi : z_) zi /= denom;
}

void CyclicTridiagSolver::solve(const std::vector<double>& rhs, std::vector<double>& x) const {
  base_.solve(rhs, x);
  const double vy = x[0] + corner_first_ * x[n_ - 1] / gamma_;
  for (std::size_t i = 0; i < n_; ++i) x[i] -= vy * z_[i];
}

std::vector<double> CyclicTridiagSolver::solve(const std::vector<double>& rhs) const {
  std::vector<double> x;
  solve(rhs, x);
  return x;
}

} // namespace terracelab
