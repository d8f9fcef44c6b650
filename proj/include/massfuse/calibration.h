// Regression calibration of the probability-sample weights to benchmark
// totals known from the big-data sample, under the chi-square distance.

#ifndef MASSFUSE_CALIBRATION_H_
#define MASSFUSE_CALIBRATION_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "massfuse/sample.h"

namespace massfuse {

// h(delta_b, x, y) for one unit. For units outside the big-data sample the
// map must not depend on x or y: their population total is only known
// through the count N - N_B.
using CalibrationMap =
    std::function<Eigen::VectorXd(bool delta_b, std::span<const double> x,
                                  double y)>;

struct CalibrationSpec {
  std::vector<std::string> components;
  CalibrationMap h_map;
  std::size_t n_covariates = 0;
  // Outcome of the big-data sample that plays y in h.
  std::size_t y_outcome = 0;
};

// h = (delta_b, 1 - delta_b, delta_b x_1, ..., delta_b x_p, delta_b y).
CalibrationSpec default_calibration_spec(std::size_t n_covariates,
                                         std::size_t y_outcome = 0);

// N H: sum of h over the big-data sample plus (N - N_B) h(0, ., .).
Eigen::VectorXd compute_benchmark(const BigSample& b_sample,
                                  std::size_t population_size,
                                  const CalibrationSpec& spec);

struct CalibrationResult {
  Eigen::VectorXd omega;
  // Multipliers of the retained components (vacuous ones get 0).
  Eigen::VectorXd lagrange;
  Eigen::VectorXd achieved_totals;
  // max_r |sum omega h_r - T_r| / (1 + |T_r|), on the per-N scale.
  double max_relative_violation = 0.0;
  std::size_t negative_weights = 0;
  // Components that are zero on every sampled unit with a zero target.
  std::vector<std::size_t> vacuous_components;
  double distance = 0.0;
};

// omega_i = d_i (1 + h_i' lambda) with (sum d h h') lambda = T - sum d h.
// h is n x r, one row per unit. A component that is zero on every unit but
// has a nonzero target, or that is linearly dependent on the others (1e-10
// relative), raises CollinearConstraintError naming it.
CalibrationResult calibrate_weights(
    const Eigen::VectorXd& d, const Eigen::MatrixXd& h,
    const Eigen::VectorXd& target_totals,
    std::span<const std::string> component_names = {},
    std::size_t population_size = 0);

// Sum of d_i (omega_i / d_i - 1)^2.
double chi_square_distance(const Eigen::VectorXd& d,
                           const Eigen::VectorXd& omega);

// h evaluated on every A-unit, using the unit's delta_b flag and the
// imputed y.
Eigen::MatrixXd calibration_design(const ProbabilitySample& sample_a,
                                   std::span<const double> y_imputed,
                                   const CalibrationSpec& spec);
// h evaluated on every big-data row (delta_b = 1, observed y).
Eigen::MatrixXd calibration_design(const BigSample& b_sample,
                                   const CalibrationSpec& spec);

// (sum_U h h')^-1 [sum_B h g + sum_{A, delta_b = 0} d h g*]. Components
// that vanish on the whole population get coefficient 0; throws RankError
// when the remaining population Gram matrix is singular.
Eigen::VectorXd beta_hat(const Eigen::MatrixXd& h_b, std::span<const double> g_b,
                         const Eigen::MatrixXd& h_a, const std::vector<bool>& delta_a,
                         std::span<const double> d, std::span<const double> g_a,
                         std::size_t population_size,
                         const CalibrationSpec& spec);

}  // namespace massfuse

#endif  // MASSFUSE_CALIBRATION_H_
