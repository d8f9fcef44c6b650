// Logistic model for selection into the big-data sample, fitted by the
// design-weighted pseudo-likelihood
//   l(eta) = sum_B log{p_i / (1 - p_i)} + sum_A d_i log(1 - p_i),
// whose score is sum_B x_i - sum_A d_i p_i x_i.

#ifndef MASSFUSE_PROPENSITY_H_
#define MASSFUSE_PROPENSITY_H_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "massfuse/frame.h"
#include "massfuse/sample.h"

namespace massfuse {

struct PropensityModel {
  // Working features: an intercept followed by these covariate columns.
  std::vector<std::size_t> features;
  Eigen::VectorXd coefficients;
  int iterations = 0;
  // Euclidean norm of the score divided by the estimated population size.
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;

  double linear_predictor(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

struct PropensityOptions {
  int max_iterations = 100;
  // Convergence threshold on the scaled score norm.
  double tolerance = 1e-8;
};

// Newton-Raphson with step halving. Throws ConvergenceError on
// non-convergence or when the linear predictor diverges (separation), and
// IndexError on a feature outside the covariates.
PropensityModel fit_propensity(const RowMatrix& x_a, std::span<const double> d,
                               const RowMatrix& x_b,
                               std::vector<std::size_t> features,
                               const PropensityOptions& options = {});
PropensityModel fit_propensity(const ProbabilitySample& sample_a,
                               const BigSample& b_sample,
                               std::vector<std::size_t> features,
                               const PropensityOptions& options = {});

}  // namespace massfuse

#endif  // MASSFUSE_PROPENSITY_H_
