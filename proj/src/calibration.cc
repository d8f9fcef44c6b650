#include "massfuse/calibration.h"

#include <cmath>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

std::string component_name(std::span<const std::string> names, std::size_t r) {
  return r < names.size() ? names[r] : "h[" + std::to_string(r) + "]";
}

Eigen::VectorXd off_b_h(const CalibrationSpec& spec) {
  const std::vector<double> zeros(spec.n_covariates, 0.0);
  return spec.h_map(false, zeros, 0.0);
}

}  // namespace

CalibrationSpec default_calibration_spec(std::size_t n_covariates,
                                         std::size_t y_outcome) {
  CalibrationSpec spec;
  spec.components = {"delta_b", "1-delta_b"};
  for (std::size_t j = 0; j < n_covariates; ++j) {
    spec.components.push_back("delta_b*x" + std::to_string(j + 1));
  }
  spec.components.push_back("delta_b*y");
  spec.n_covariates = n_covariates;
  spec.y_outcome = y_outcome;
  spec.h_map = [n_covariates](bool delta_b, std::span<const double> x,
                              double y) {
    if (x.size() != n_covariates) {
      throw DimensionError("calibration map expects " +
                           std::to_string(n_covariates) + " covariates");
    }
    const double b = delta_b ? 1.0 : 0.0;
    Eigen::VectorXd h(static_cast<Eigen::Index>(n_covariates + 3));
    h[0] = b;
    h[1] = 1.0 - b;
    for (std::size_t j = 0; j < n_covariates; ++j) {
      h[static_cast<Eigen::Index>(j + 2)] = b * x[j];
    }
    h[static_cast<Eigen::Index>(n_covariates + 2)] = b * y;
    return h;
  };
  return spec;
}

Eigen::MatrixXd calibration_design(const BigSample& b_sample,
                                   const CalibrationSpec& spec) {
  const Frame& f = b_sample.frame;
  if (spec.y_outcome >= f.n_outcomes()) {
    throw IndexError("calibration outcome index out of range");
  }
  Eigen::MatrixXd h;
  for (std::size_t i = 0; i < f.n_rows(); ++i) {
    const Eigen::VectorXd row = spec.h_map(true, f[i].x, f[i].y[spec.y_outcome]);
    if (i == 0) h.resize(static_cast<Eigen::Index>(f.n_rows()), row.size());
    h.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return h;
}

Eigen::MatrixXd calibration_design(const ProbabilitySample& sample_a,
                                   std::span<const double> y_imputed,
                                   const CalibrationSpec& spec) {
  const Frame& f = sample_a.frame;
  if (y_imputed.size() != f.n_rows()) {
    throw DimensionError("one imputed value per A-unit needed");
  }
  const Eigen::VectorXd h0 = off_b_h(spec);
  Eigen::MatrixXd h(static_cast<Eigen::Index>(f.n_rows()), h0.size());
  for (std::size_t i = 0; i < f.n_rows(); ++i) {
    const Eigen::VectorXd row = spec.h_map(f[i].delta_b, f[i].x, y_imputed[i]);
    if (row.size() != h0.size()) {
      throw DimensionError("calibration map returned vectors of varying length");
    }
    if (!f[i].delta_b && row != h0) {
      throw ModelError("calibration map depends on x or y outside the "
                       "big-data sample");
    }
    h.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return h;
}

Eigen::VectorXd compute_benchmark(const BigSample& b_sample,
                                  std::size_t population_size,
                                  const CalibrationSpec& spec) {
  if (b_sample.size() > population_size) {
    throw DimensionError("big-data sample larger than the population");
  }
  const Eigen::VectorXd h0 = off_b_h(spec);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(h0.size());
  const Frame& f = b_sample.frame;
  for (std::size_t i = 0; i < f.n_rows(); ++i) {
    total += spec.h_map(true, f[i].x, f[i].y.at(spec.y_outcome));
  }
  total += static_cast<double>(population_size - b_sample.size()) * h0;
  return total;
}

double chi_square_distance(const Eigen::VectorXd& d,
                           const Eigen::VectorXd& omega) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double r = omega[i] / d[i] - 1.0;
    s += d[i] * r * r;
  }
  return s;
}

CalibrationResult calibrate_weights(const Eigen::VectorXd& d,
                                    const Eigen::MatrixXd& h,
                                    const Eigen::VectorXd& target_totals,
                                    std::span<const std::string> component_names,
                                    std::size_t population_size) {
  const Eigen::Index n = d.size();
  const Eigen::Index r = h.cols();
  if (h.rows() != n) throw DimensionError("one h row per weight needed");
  if (target_totals.size() != r) {
    throw DimensionError("one target total per calibration component needed");
  }
  if (n == 0 || r == 0) throw DimensionError("empty calibration problem");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) {
      throw DesignError("design weights must be positive and finite");
    }
  }
  if (!target_totals.allFinite() || !h.allFinite()) {
    throw DimensionError("calibration inputs must be finite");
  }

  CalibrationResult result;
  const double tscale = std::max(1.0, target_totals.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < r; ++c) {
    if (h.col(c).cwiseAbs().maxCoeff() > 0.0) {
      keep.push_back(c);
    } else if (std::abs(target_totals[c]) <= 1e-12 * tscale) {
      result.vacuous_components.push_back(static_cast<std::size_t>(c));
    } else {
      throw CollinearConstraintError(
          component_name(component_names, static_cast<std::size_t>(c)));
    }
  }
  if (keep.empty()) {
    result.omega = d;
    result.lagrange = Eigen::VectorXd::Zero(r);
    result.achieved_totals = Eigen::VectorXd::Zero(r);
    return result;
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd hk(n, m);
  Eigen::VectorXd tk(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    hk.col(j) = h.col(keep[j]);
    tk[j] = target_totals[keep[j]];
  }

  const Eigen::VectorXd sqrt_d = d.cwiseSqrt();
  const Eigen::MatrixXd scaled = sqrt_d.asDiagonal() * hk;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < m) {
    const Eigen::Index bad = qr.colsPermutation().indices()[qr.rank()];
    throw CollinearConstraintError(component_name(
        component_names, static_cast<std::size_t>(keep[bad])));
  }

  const Eigen::MatrixXd gram = scaled.transpose() * scaled;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd omega = d;
  // A couple of refinement sweeps recover the accuracy lost to the
  // conditioning of the Gram matrix.
  for (int sweep = 0; sweep < 3; ++sweep) {
    const Eigen::VectorXd residual = tk - hk.transpose() * omega;
    lambda += ldlt.solve(residual);
    omega = d.cwiseProduct((Eigen::VectorXd::Ones(n) + hk * lambda));
  }

  result.omega = omega;
  result.lagrange = Eigen::VectorXd::Zero(r);
  for (Eigen::Index j = 0; j < m; ++j) result.lagrange[keep[j]] = lambda[j];
  result.achieved_totals = h.transpose() * omega;
  const double scale =
      population_size > 0 ? static_cast<double>(population_size) : 1.0;
  for (Eigen::Index c = 0; c < r; ++c) {
    const double got = result.achieved_totals[c] / scale;
    const double want = target_totals[c] / scale;
    result.max_relative_violation = std::max(
        result.max_relative_violation, std::abs(got - want) / (1.0 + std::abs(want)));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (omega[i] < 0.0) ++result.negative_weights;
  }
  result.distance = chi_square_distance(d, omega);
  return result;
}

Eigen::VectorXd beta_hat(const Eigen::MatrixXd& h_b, std::span<const double> g_b,
                         const Eigen::MatrixXd& h_a,
                         const std::vector<bool>& delta_a,
                         std::span<const double> d, std::span<const double> g_a,
                         std::size_t population_size,
                         const CalibrationSpec& spec) {
  const auto n_b = static_cast<std::size_t>(h_b.rows());
  const auto n_a = static_cast<std::size_t>(h_a.rows());
  if (g_b.size() != n_b || delta_a.size() != n_a || d.size() != n_a ||
      g_a.size() != n_a) {
    throw DimensionError("beta_hat: inconsistent input lengths");
  }
  if (n_b > population_size) {
    throw DimensionError("big-data sample larger than the population");
  }
  const Eigen::VectorXd h0 = off_b_h(spec);
  const Eigen::Index r = h0.size();
  if ((n_b > 0 && h_b.cols() != r) || (n_a > 0 && h_a.cols() != r)) {
    throw DimensionError("beta_hat: h has the wrong number of components");
  }
  Eigen::MatrixXd gram =
      static_cast<double>(population_size - n_b) * h0 * h0.transpose();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(r);
  if (n_b > 0) {
    gram += h_b.transpose() * h_b;
    v += h_b.transpose() *
         Eigen::Map<const Eigen::VectorXd>(g_b.data(), static_cast<Eigen::Index>(n_b));
  }
  for (std::size_t i = 0; i < n_a; ++i) {
    if (!delta_a[i]) {
      v += d[i] * g_a[i] * h_a.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < r; ++c) {
    if (gram(c, c) > 0.0) keep.push_back(c);
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(r);
  if (keep.empty()) return beta;
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd gk(m, m);
  Eigen::VectorXd vk(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    vk[a] = v[keep[a]];
    for (Eigen::Index b = 0; b < m; ++b) gk(a, b) = gram(keep[a], keep[b]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gk);
  qr.setThreshold(1e-12);
  if (qr.rank() < m) {
    throw RankError("population Gram matrix of the calibration variables is "
                    "singular");
  }
  const Eigen::VectorXd bk = qr.solve(vk);
  for (Eigen::Index a = 0; a < m; ++a) beta[keep[a]] = bk[a];
  return beta;
}

}  // namespace massfuse
