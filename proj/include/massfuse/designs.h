// Sampling designs with closed-form inclusion probabilities, and the
// design-based double sum that every variance estimator reduces to.
//
// Population units are addressed by their 0-based position in the population
// frame. A stratified design places its strata in contiguous blocks, in the
// order given: stratum h covers positions [offset_h, offset_h + N_h).

#ifndef MASSFUSE_DESIGNS_H_
#define MASSFUSE_DESIGNS_H_

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace massfuse {

struct Srswor {
  std::size_t population_size = 1;
  std::size_t sample_size = 1;
};

struct Stratum {
  std::size_t population_size = 0;
  std::size_t sample_size = 0;
  std::string label;
};

struct StratifiedSrswor {
  std::vector<Stratum> strata;
  // offsets[h] = first population position of stratum h; back() = N.
  std::vector<std::size_t> offsets;
};

struct ExplicitJoint {
  Eigen::VectorXd pi;
  Eigen::MatrixXd pi_joint;
};

class DesignDescriptor {
 public:
  using Variant = std::variant<Srswor, StratifiedSrswor, ExplicitJoint>;

  DesignDescriptor() = default;

  // All factories throw DesignError on invalid sizes or probabilities.
  static DesignDescriptor srswor(std::size_t population_size,
                                 std::size_t sample_size);
  static DesignDescriptor stratified(std::vector<Stratum> strata);
  static DesignDescriptor explicit_joint(Eigen::VectorXd pi,
                                         Eigen::MatrixXd pi_joint);

  const Variant& variant() const { return variant_; }
  bool is_stratified() const {
    return std::holds_alternative<StratifiedSrswor>(variant_);
  }
  std::size_t population_size() const;
  // Expected sample size (exact for the SRS designs).
  std::size_t sample_size() const;
  // Stratum position of a unit; 0 for unstratified designs.
  std::size_t stratum_of(std::size_t unit) const;

 private:
  explicit DesignDescriptor(Variant v) : variant_(std::move(v)) {}
  Variant variant_ = Srswor{};
};

// Throw IndexError when a unit is outside the population.
double first_order_pi(const DesignDescriptor& design, std::size_t unit);
double joint_pi(const DesignDescriptor& design, std::size_t i, std::size_t j);

// Denominator of the pair coefficient in the double sum.
enum class PairWeighting {
  // (pi_ij - pi_i pi_j) / pi_ij: Horvitz-Thompson form, design-unbiased.
  kJointProbability,
  // (pi_ij - pi_i pi_j) / (pi_i pi_j).
  kProductOfMarginals,
};

// sum_{i in A} sum_{j in A} c_ij (v_i / pi_i)(v_j / pi_j) over the sampled
// `units`, with c_ij given by `weighting`. SRS and stratified designs use the
// exchangeable closed form (O(n)); explicit designs sum all pairs. Throws
// VarianceUndefinedError when a stratum (or the SRS) has sample size 1.
double design_double_sum(
    const DesignDescriptor& design, std::span<const std::size_t> units,
    std::span<const double> values,
    PairWeighting weighting = PairWeighting::kJointProbability);

}  // namespace massfuse

#endif  // MASSFUSE_DESIGNS_H_
