// Point and variance estimators for population means of g(Y), combining a
// probability sample A (covariates, design weights, big-data membership)
// with a big-data sample B (covariates and outcomes).
//
// Every variance is N^-2 times the design double sum with the joint
// inclusion probabilities as denominator, applied to the method's
// per-unit values, except for IPW and DR whose plug-in variances are
// approximations (flagged in the report notes).

#ifndef MASSFUSE_ESTIMATORS_H_
#define MASSFUSE_ESTIMATORS_H_

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "massfuse/calibration.h"
#include "massfuse/frame.h"
#include "massfuse/gam.h"
#include "massfuse/matching.h"
#include "massfuse/propensity.h"
#include "massfuse/report.h"
#include "massfuse/sample.h"

namespace massfuse {

struct EstimatorOptions {
  // Donors per unit for KNN.
  std::size_t k = 5;
  MatchOptions match;
  GamConfig gam;
  // Propensity working features (covariate columns after the intercept);
  // all covariates when unset.
  std::optional<std::vector<std::size_t>> propensity_features;
  // Calibration variables; the default map over all covariates and
  // outcome 0 when unset.
  std::optional<CalibrationSpec> calibration;
};

// Caches the expensive pieces shared across targets and methods for one
// (A, B) pair: the 1-NN and k-NN matches, the propensity fit, the
// calibrated weights and one GAM fit per g. Not thread-safe; use one
// workspace per thread.
class Workspace {
 public:
  // The samples must outlive the workspace. Throws DimensionError when
  // A and B have different covariates.
  Workspace(const ProbabilitySample& sample_a, const BigSample& b_sample,
            EstimatorOptions options = {});
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  EstimateReport estimate(Method method, const GFunction& g);
  // Ratio of two means by the same method, with the variance of the
  // linearized values (g_num - R g_den) / mu_den. Throws
  // RatioUndefinedError when the denominator estimate is not positive.
  EstimateReport estimate_ratio(Method method, const GFunction& numerator,
                                const GFunction& denominator);

  const ProbabilitySample& sample_a() const { return a_; }
  const BigSample& b_sample() const { return b_; }
  const EstimatorOptions& options() const { return options_; }

  const MatchResult& nearest_match();
  const MatchResult& knn_match();
  const PropensityModel& propensity();
  const CalibrationResult& calibration();
  const GamModel& gam(const GFunction& g);

 private:
  struct Linear;
  struct Values;
  struct Cache;

  Values values_of(const GFunction& g) const;
  Linear evaluate(Method method, const Values& v);
  EstimateReport finish(Method method, const Linear& lin) const;
  Eigen::VectorXd gam_predictions(const GFunction& g);
  double weighted_mean(const Eigen::VectorXd& a_values) const;
  double design_variance(const Eigen::VectorXd& a_values) const;

  const ProbabilitySample& a_;
  const BigSample& b_;
  EstimatorOptions options_;
  std::vector<double> d_;
  double n_pop_ = 0.0;
  std::unique_ptr<Cache> cache_;
};

// Single-shot wrappers.
// Needs outcomes on A; throws ModelError when A has none.
EstimateReport estimate_ht(const ProbabilitySample& sample, const GFunction& g);
EstimateReport estimate_nni(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g);
EstimateReport estimate_knn(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g,
                            std::size_t k = 5);
EstimateReport estimate_gam(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g,
                            const GamConfig& config = {});
EstimateReport estimate_rc(const ProbabilitySample& sample_a,
                           const BigSample& b_sample, const GFunction& g,
                           const CalibrationSpec& spec);
// Throws ExtremeWeightError when a fitted probability on B is below 1e-6.
EstimateReport estimate_ipw(const BigSample& b_sample,
                            const PropensityModel& propensity,
                            std::size_t population_size, const GFunction& g);
EstimateReport estimate_dr(const ProbabilitySample& sample_a,
                           const BigSample& b_sample,
                           const PropensityModel& propensity,
                           const GFunction& g);
EstimateReport estimate_conditional_mean(Method method,
                                         const ProbabilitySample& sample_a,
                                         const BigSample& b_sample,
                                         const GFunction& numerator,
                                         const GFunction& denominator,
                                         const EstimatorOptions& options = {});

}  // namespace massfuse

#endif  // MASSFUSE_ESTIMATORS_H_
