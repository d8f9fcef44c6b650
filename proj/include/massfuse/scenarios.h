// Synthetic populations for the two simulation studies: the 2 x 2
// factorial (outcome model x selection model) and the stratified retail
// trade population.

#ifndef MASSFUSE_SCENARIOS_H_
#define MASSFUSE_SCENARIOS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "massfuse/designs.h"
#include "massfuse/frame.h"
#include "massfuse/rng.h"
#include "massfuse/sample.h"

namespace massfuse {

enum class Experiment { kFactorial, kMrts };
enum class ModelForm { kLinear, kNonlinear };

struct Scenario {
  std::string label;  // "I" .. "IV"
  ModelForm outcome = ModelForm::kLinear;
  ModelForm selection = ModelForm::kLinear;
};

// I = (linear, linear), II = (linear, nonlinear), III = (nonlinear,
// linear), IV = (nonlinear, nonlinear). Throws ConfigError otherwise.
Scenario scenario_from_label(std::string_view label);

// ---------------------------------------------------------------------------
// Factorial experiment. Covariates (x1, x2), outcomes (y1, y2) with y2
// binary; x1 ~ N(1, 1), x2 ~ Exp(1), and a shared alpha ~ N(0, 1).
//   linear:    y1 = 1 + x1 + x2 + alpha + eps,
//              P(y2 = 1) = expit(1 + x1 + x2 + alpha)
//   nonlinear: y1 = 0.5 (x1 - 1.5)^2 + x2^2 + alpha + eps,
//              P(y2 = 1) = expit(0.5 (x1 - 1.5)^2 + x2^2 + alpha)

Frame generate_factorial_population(std::size_t population_size,
                                    ModelForm outcome, Rng& rng);
// linear: logit p = x2; nonlinear: logit p = -3 + (x1 - 1.5)^2 + (x2 - 2)^2.
SelectionModel factorial_selection(ModelForm selection);

// ---------------------------------------------------------------------------
// Retail trade experiment. Covariates (x, z) drawn independently from
// N(mu_h, sigma_h^2) within stratum h; outcome
//   linear:    y = b0 + x + z + eps
//   nonlinear: y = b0 + x^2 + z^2 + eps,     eps ~ N(0, 0.52)
// with b0 set so that the population mean of y is 12.73.

inline constexpr double kMrtsTargetMean = 12.73;
inline constexpr double kMrtsNoiseVariance = 0.52;
inline constexpr double kMrtsSelectionRate = 0.30;

struct MrtsStratumSpec {
  std::size_t population_size = 0;
  std::size_t sample_size = 0;
  double mean = 0.0;
  double sd = 0.0;
};

// The 16 strata at full scale (N = 812,765, n = 1,914).
const std::vector<MrtsStratumSpec>& mrts_strata();
// Reads the same table from CSV (stratum, N_h, n_h, mu_x, sigma_x).
std::vector<MrtsStratumSpec> read_mrts_strata(const std::string& path);
// N_h' = max(round(scale N_h), n_h); sample sizes unchanged.
std::vector<MrtsStratumSpec> scale_strata(std::span<const MrtsStratumSpec> strata,
                                          double scale);
// Stratified SRSWOR over the strata, labelled "1".."16".
DesignDescriptor mrts_design(std::span<const MrtsStratumSpec> strata);

// target - mean(values): the intercept that moves the mean to target.
double solve_beta0(std::span<const double> without_intercept, double target);

Frame generate_mrts_population(std::span<const MrtsStratumSpec> strata,
                               ModelForm outcome, Rng& rng,
                               double target_mean = kMrtsTargetMean);
// linear: logit p = a0 + z; nonlinear: logit p = a0 + x + z^2, with a0
// calibrated on `population` to a mean selection probability of 0.30.
SelectionModel mrts_selection(ModelForm selection, const Frame& population,
                              double target_rate = kMrtsSelectionRate);

}  // namespace massfuse

#endif  // MASSFUSE_SCENARIOS_H_
