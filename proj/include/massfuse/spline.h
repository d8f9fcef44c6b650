// B-spline bases on a clamped knot vector and their integrated squared
// second-derivative penalty.

#ifndef MASSFUSE_SPLINE_H_
#define MASSFUSE_SPLINE_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace massfuse {

class SplineBasis {
 public:
  // Interior knots at equally spaced quantiles of the distinct values of
  // `x`, boundary knots at min and max. Throws BasisError unless
  // size > degree + 1 and x has at least `size` distinct values.
  static SplineBasis build(std::span<const double> x, std::size_t size,
                           int degree = 3);
  // Throws BasisError unless the knots are strictly increasing inside the
  // boundary and degree >= 1.
  SplineBasis(std::vector<double> interior_knots,
              std::pair<double, double> boundary_knots, int degree = 3);

  int degree() const { return degree_; }
  std::size_t size() const { return interior_.size() + degree_ + 1; }
  const std::vector<double>& interior_knots() const { return interior_; }
  std::pair<double, double> boundary_knots() const { return boundary_; }
  // Full knot vector with (degree + 1)-fold boundary knots.
  const std::vector<double>& knot_vector() const { return knots_; }

  // Basis functions of index first .. first + degree are the only ones
  // nonzero at x; writes their values (derivative order 0, 1 or 2) into
  // `out` (length degree + 1) and returns `first`. x is clamped to the
  // boundary knots.
  std::size_t evaluate_nonzero(double x, std::span<double> out,
                               int derivative = 0) const;
  // Dense vector of all basis values (or derivatives) at x.
  Eigen::VectorXd evaluate(double x, int derivative = 0) const;

 private:
  std::size_t find_span(double x) const;

  int degree_ = 3;
  std::vector<double> interior_;
  std::pair<double, double> boundary_;
  std::vector<double> knots_;
};

// S[m][l] = integral of B_m''(x) B_l''(x) over the boundary interval, by
// Gauss-Legendre quadrature on every knot interval (exact for the
// polynomial integrand).
Eigen::MatrixXd penalty_matrix(const SplineBasis& basis);

}  // namespace massfuse

#endif  // MASSFUSE_SPLINE_H_
