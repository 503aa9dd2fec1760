#pragma once

#include <cstddef>
#include <vector>

namespace terracelab {

/// Prefactored tridiagonal system with constant coefficients.
///
/// Stores the forward-elimination multipliers once so that repeated solves
/// against new right hand sides cost two sweeps and no divisions beyond the
/// precomputed reciprocals. Requires a nonsingular system; the factorization
/// throws if a pivot collapses.
class TridiagSolver {
public:
  TridiagSolver() = default;

  /// lower[i] multiplies x[i-1] in row i (lower[0] ignored),
  /// upper[i] multiplies x[i+1] in row i (upper[n-1] ignored).
  TridiagSolver(std::vector<double> lower, std::vector<double> diag,
                std::vector<double> upper);

  void solve(const std::vector<double>& rhs, std::vector<double>& x) const;
  std::vector<double> solve(const std::vector<double>& rhs) const;

  std::size_t size() const { return diag_.size(); }

private:
  std::vector<double> lower_, diag_, upper_;
  std::vector<double> pivot_inv_; // reciprocal pivots after elimination
};

/// Prefactored periodic (cyclic) tridiagonal system: row 0 couples to the
/// last unknown and vice versa. Solved by the Sherman-Morrison correction on
/// top of a plain tridiagonal factorization of the bordered interior.
class CyclicTridiagSolver {
public:
  CyclicTridiagSolver() = default;

  /// corner_first = coefficient of x[n-1] in row 0,
  /// corner_last  = coefficient of x[0] in row n-1.
  CyclicTridiagSolver(std::vector<double> lower, std::vector<double> diag,
                      std::vector<double> upper, double corner_first,
                      double corner_last);

  void solve(const std::vector<double>& rhs, std::vector<double>& x) const;
  std::vector<double> solve(const std::vector<double>& rhs) const;

  std::size_t size() const { return n_; }

private:
  std::size_t n_ = 0;
  double gamma_ = 0.0;
  double corner_first_ = 0.0, corner_last_ = 0.0;
  TridiagSolver base_;
  std::vector<double> z_; // base solve of the rank-one carrier, cached
  mutable std::vector<double> scratch_;
};

} // namespace terracelab
