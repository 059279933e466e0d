#pragma once

// Thin dense LU wrapper with an explicit singularity check.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace entsurv {

inline constexpr double kPivotTol = 1e-12;

class SingularSolve : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LU with partial pivoting; throws SingularSolve if any |U_ii| < kPivotTol.
class DenseLu {
 public:
  DenseLu(const Eigen::MatrixXd& a, const std::string& context) : lu_(a) {
    const auto& m = lu_.matrixLU();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!(std::abs(m(i, i)) >= kPivotTol))
        throw SingularSolve(context + ": matrix is numerically singular (pivot " + std::to_string(i) + ")");
    }
  }

  template <typename Rhs>
  auto solve(const Rhs& b) const {
    return lu_.solve(b);
  }

  Eigen::MatrixXd inverse() const { return lu_.inverse(); }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline Eigen::VectorXd lu_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::string& context) {
  if (a.rows() == 0) return Eigen::VectorXd();
  return DenseLu(a, context).solve(b);
}

}  // namespace entsurv
