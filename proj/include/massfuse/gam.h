// Additive models fitted by penalized iteratively reweighted least squares,
// with a shared smoothing parameter chosen by generalized cross-validation.
//
// The linear predictor is
//   eta(x) = intercept + sum_k sum_m gamma_km B_km(x_k),
// each covariate block constrained to sum_m gamma_km = 0 and the fit carried
// out on column-centred blocks. The penalty is sum_k lambda_k gamma_k' S_k
// gamma_k.

#ifndef MASSFUSE_GAM_H_
#define MASSFUSE_GAM_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "massfuse/frame.h"
#include "massfuse/sample.h"
#include "massfuse/spline.h"

namespace massfuse {

enum class Link { kIdentity, kLogit };

enum class BasisKind {
  kBSpline,
  // One unpenalized column x_k per covariate: an additive linear model.
  kLinear,
};

struct GamConfig {
  std::size_t basis_size = 10;
  int degree = 3;
  BasisKind basis_kind = BasisKind::kBSpline;
  // Selected from the responses when unset: logit if every value is 0 or 1.
  std::optional<Link> link;
  // Shared smoothing parameter; GCV over the grid when unset and
  // `lambdas` is empty.
  std::optional<double> lambda;
  // Fixed per-covariate smoothing parameters.
  std::vector<double> lambdas;
  std::size_t grid_size = 30;
  double grid_min = 1e-6;
  double grid_max = 1e6;
  int max_iterations = 100;
  double tolerance = 1e-8;
};

struct GamDiagnostics {
  double deviance = 0.0;
  double penalized_deviance = 0.0;
  double edf = 0.0;
  double gcv = 0.0;
  int iterations = 0;
  // Ridge added to the penalized normal matrix (0 when none was needed).
  double ridge = 0.0;
  // Log-spaced grid, ascending, with GCV score and tr(H) per point. Empty
  // for fixed smoothing. Failed fits score +inf.
  std::vector<double> grid_lambda;
  std::vector<double> grid_gcv;
  std::vector<double> grid_edf;
};

class GamModel {
 public:
  std::size_t n_covariates() const { return blocks_.size(); }
  Link link() const { return link_; }
  BasisKind basis_kind() const { return basis_kind_; }
  // Basis of covariate k (B-spline models only).
  const SplineBasis& basis(std::size_t k) const { return blocks_.at(k).basis; }
  std::size_t block_size(std::size_t k) const { return blocks_.at(k).size; }
  const Eigen::MatrixXd& penalty(std::size_t k) const {
    return blocks_.at(k).penalty;
  }
  double lambda(std::size_t k) const { return lambdas_.at(k); }
  const std::vector<double>& lambdas() const { return lambdas_; }

  // (intercept, gamma_1, ..., gamma_p); length 1 + sum_k M_k.
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double intercept() const { return coefficients_[0]; }
  Eigen::VectorXd gamma(std::size_t k) const;

  const GamDiagnostics& diagnostics() const { return diagnostics_; }
  // Fitted means on the training rows, as computed by the fitter.
  const Eigen::VectorXd& fitted() const { return fitted_; }

  // Covariates outside the training range are clamped to it. Throws
  // DimensionError on a length mismatch.
  double predict(std::span<const double> x) const;
  double predict_link(std::span<const double> x) const;
  double predict_link(std::span<const double> x,
                      const Eigen::VectorXd& coefficients) const;
  Eigen::VectorXd predict(const RowMatrix& x) const;

  // Row of the uncentred design: (1, B_1(x_1), ..., B_p(x_p)).
  Eigen::VectorXd design_row(std::span<const double> x) const;
  // Block-diagonal sum_k lambda_k S_k in the coefficient layout.
  Eigen::MatrixXd penalty_matrix() const;

  // deviance(y, h(eta)) + gamma' P gamma for any coefficient vector.
  double penalized_objective(const RowMatrix& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& coefficients) const;
  Eigen::VectorXd penalized_gradient(const RowMatrix& x,
                                     const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& coefficients) const;

 private:
  friend class GamFitter;

  struct Block {
    SplineBasis basis{{}, {0.0, 1.0}, 1};
    std::size_t size = 0;
    Eigen::MatrixXd penalty;
    // Training range, used to clamp linear-basis inputs.
    double lo = 0.0;
    double hi = 0.0;
  };

  // Writes the nonzero entries of block k at x; returns the first column
  // offset within the block and the count.
  std::size_t block_nonzero(std::size_t k, double x, std::span<double> out,
                            std::size_t& count) const;

  std::vector<Block> blocks_;
  std::vector<std::size_t> offsets_;
  std::vector<double> lambdas_;
  Link link_ = Link::kIdentity;
  BasisKind basis_kind_ = BasisKind::kBSpline;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd fitted_;
  GamDiagnostics diagnostics_;
};

double deviance(Link link, const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

// Throws ModelError on bad inputs (logit with responses outside {0, 1},
// empty data), ConvergenceError when P-IRLS fails at a fixed lambda or on
// every grid point, RankError when the penalized normal matrix stays
// singular after the ridge.
GamModel fit_gam(const RowMatrix& x, const Eigen::VectorXd& y,
                 const GamConfig& config = {});
GamModel fit_gam(const BigSample& b_sample, const GFunction& g,
                 const GamConfig& config = {});

}  // namespace massfuse

#endif  // MASSFUSE_GAM_H_
