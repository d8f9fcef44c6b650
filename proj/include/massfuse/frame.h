// Finite-population rows, frames, and the g(.) functions whose population
// means are estimated.

#ifndef MASSFUSE_FRAME_H_
#define MASSFUSE_FRAME_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace massfuse {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct UnitRecord {
  std::int64_t id = 0;
  std::vector<double> x;
  // Binary outcomes are stored as 0/1.
  std::vector<double> y;
  bool delta_b = false;
  // Stratum position (0-based) for stratified designs; 0 otherwise.
  int stratum = 0;
};

// Column metadata shared by a frame and its CSV representation.
struct FrameSchema {
  std::vector<std::string> covariates;
  std::vector<std::string> outcomes;
  // Subset of `outcomes` restricted to {0, 1}.
  std::vector<std::string> binary_outcomes;
  bool has_delta_b = true;
  bool has_stratum = false;
};

// Immutable ordered collection of records with consistent dimensions.
class Frame {
 public:
  Frame() = default;
  // Throws DimensionError on inconsistent x/y lengths, SchemaError on
  // duplicate ids or non-binary values in a binary column.
  Frame(std::vector<UnitRecord> records, FrameSchema schema);

  std::size_t n_rows() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t n_covariates() const { return schema_.covariates.size(); }
  std::size_t n_outcomes() const { return schema_.outcomes.size(); }

  const std::vector<UnitRecord>& records() const { return records_; }
  const UnitRecord& operator[](std::size_t i) const { return records_[i]; }
  const FrameSchema& schema() const { return schema_; }

  std::size_t covariate_index(std::string_view name) const;
  std::size_t outcome_index(std::string_view name) const;
  bool outcome_is_binary(std::size_t j) const;

  RowMatrix covariate_matrix() const;
  Eigen::VectorXd outcome_column(std::size_t j) const;

  Frame subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<UnitRecord> records_;
  FrameSchema schema_;
};

struct IdentityG {
  std::size_t outcome = 0;
};
// I(y[outcome] < threshold).
struct IndicatorG {
  std::size_t outcome = 0;
  double threshold = 0.0;
};
// y[a] * y[b]; with b binary this is the numerator of E(y_a | y_b = 1).
struct ProductG {
  std::size_t outcome_a = 0;
  std::size_t outcome_b = 1;
};

using GFunction = std::variant<IdentityG, IndicatorG, ProductG>;

// Throws IndexError when an outcome index is out of range.
double apply_g(const GFunction& g, std::span<const double> y);
double apply_g(const GFunction& g, const UnitRecord& record);
Eigen::VectorXd apply_g(const GFunction& g, const Frame& frame);

std::string describe(const GFunction& g);
// Largest outcome index the function reads.
std::size_t max_outcome_index(const GFunction& g);

}  // namespace massfuse

#endif  // MASSFUSE_FRAME_H_
