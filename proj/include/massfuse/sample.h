// The two observed samples: a design-weighted probability sample (A) and a
// large non-probability sample with observed outcomes (B). Also the draw
// operations used by the simulations.

#ifndef MASSFUSE_SAMPLE_H_
#define MASSFUSE_SAMPLE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "massfuse/designs.h"
#include "massfuse/frame.h"
#include "massfuse/rng.h"

namespace massfuse {

struct ProbabilitySample {
  Frame frame;
  std::vector<double> pi;
  DesignDescriptor design;
  std::size_t population_size = 0;
  // Population position of every sampled row, used for pi_ij lookups.
  std::vector<std::size_t> units;

  std::size_t n() const { return frame.n_rows(); }
  std::vector<double> design_weights() const;
};

// Validates the pieces and attaches design probabilities. When `pi` is given
// it must agree with the design to 1e-12. Throws DesignError.
ProbabilitySample make_probability_sample(
    Frame frame, DesignDescriptor design, std::vector<std::size_t> units,
    std::optional<std::vector<double>> pi = std::nullopt);

struct BigSample {
  Frame frame;

  std::size_t size() const { return frame.n_rows(); }
};

// Throws SchemaError unless every row carries finite outcomes (q >= 1).
BigSample make_big_sample(Frame frame);

// ---------------------------------------------------------------------------
// Big-data selection mechanisms.

// logit p = coefficients[0] + sum_j coefficients[j + 1] * x[j].
struct LogisticLinear {
  std::vector<double> coefficients;
};

// Fixed nonlinear logistic forms of the two simulation studies.
enum class NonlinearForm {
  // logit p = -3 + (x1 - 1.5)^2 + (x2 - 2)^2
  kFactorial,
  // logit p = intercept + x + z^2, with covariates (x, z)
  kMrts,
};

struct LogisticNonlinear {
  NonlinearForm form = NonlinearForm::kFactorial;
  double intercept = 0.0;
};

using SelectionModel = std::variant<LogisticLinear, LogisticNonlinear>;

double selection_linear_predictor(const SelectionModel& model,
                                  std::span<const double> x);
double selection_probability(const SelectionModel& model,
                             std::span<const double> x);
// Same model with its intercept replaced.
SelectionModel with_intercept(const SelectionModel& model, double intercept);

double logistic(double eta);

// Returns intercept a such that N^-1 sum_i logistic(a + offsets[i]) is within
// 1e-6 of `target`. Monotone bisection on an expanding bracket; throws
// ConvergenceError when no bracket is found and DesignError on a target
// outside (0, 1).
double calibrate_intercept(std::span<const double> offsets, double target);
// Convenience: offsets are the model's linear predictor with intercept 0.
double calibrate_intercept(const Frame& population, const SelectionModel& model,
                           double target);

// ---------------------------------------------------------------------------
// Draws.

// Partial Fisher-Yates within each stratum (or over the whole frame for
// SRSWOR); selected rows are returned in population order. Throws
// DesignError when the design does not fit the population.
ProbabilitySample draw_sample_a(const Frame& population,
                                const DesignDescriptor& design, Rng& rng);

struct BigSampleDraw {
  // Copy of the population with delta_b set for every row.
  Frame population;
  BigSample sample;
  std::vector<std::size_t> units;
};

// Independent Bernoulli(p_i) selection. Throws ModelError unless every
// probability lies in (0, 1].
BigSampleDraw draw_sample_b(const Frame& population,
                            std::span<const double> probabilities, Rng& rng);
BigSampleDraw draw_sample_b(const Frame& population,
                            const SelectionModel& model, Rng& rng);

}  // namespace massfuse

#endif  // MASSFUSE_SAMPLE_H_
