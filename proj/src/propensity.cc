#include "massfuse/propensity.h"

#include <cmath>
#include <limits>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

// log(1 - logistic(eta)) = -log(1 + exp(eta)).
double log1m_logistic(double eta) {
  return eta > 0.0 ? -eta - std::log1p(std::exp(-eta))
                   : -std::log1p(std::exp(eta));
}

Eigen::MatrixXd features_of(const RowMatrix& x,
                            const std::vector<std::size_t>& features) {
  Eigen::MatrixXd f(x.rows(), static_cast<Eigen::Index>(features.size() + 1));
  f.col(0).setOnes();
  for (std::size_t j = 0; j < features.size(); ++j) {
    f.col(static_cast<Eigen::Index>(j + 1)) =
        x.col(static_cast<Eigen::Index>(features[j]));
  }
  return f;
}

}  // namespace

double PropensityModel::linear_predictor(std::span<const double> x) const {
  double eta = coefficients[0];
  for (std::size_t j = 0; j < features.size(); ++j) {
    eta += coefficients[static_cast<Eigen::Index>(j + 1)] * x[features[j]];
  }
  return eta;
}

double PropensityModel::probability(std::span<const double> x) const {
  return logistic(linear_predictor(x));
}

PropensityModel fit_propensity(const RowMatrix& x_a, std::span<const double> d,
                               const RowMatrix& x_b,
                               std::vector<std::size_t> features,
                               const PropensityOptions& options) {
  if (static_cast<std::size_t>(x_a.rows()) != d.size()) {
    throw DimensionError("one design weight per A-unit needed");
  }
  if (x_a.rows() == 0) throw EmptyFrameError("probability sample is empty");
  if (x_a.cols() != x_b.cols() && x_b.rows() > 0) {
    throw DimensionError("A and B covariates differ in width");
  }
  for (std::size_t f : features) {
    if (f >= static_cast<std::size_t>(x_a.cols())) {
      throw IndexError("propensity feature " + std::to_string(f) +
                       " outside the covariates");
    }
  }
  const Eigen::MatrixXd fa = features_of(x_a, features);
  const Eigen::MatrixXd fb = features_of(x_b, features);
  const Eigen::Map<const Eigen::VectorXd> dv(d.data(), static_cast<Eigen::Index>(d.size()));
  const Eigen::VectorXd b_sum = fb.colwise().sum().transpose();
  const double n_hat = dv.sum();

  auto loglik = [&](const Eigen::VectorXd& eta_coef, double& max_abs_eta) {
    const Eigen::VectorXd eta = fa * eta_coef;
    max_abs_eta = eta.cwiseAbs().maxCoeff();
    double l = b_sum.dot(eta_coef);
    for (Eigen::Index i = 0; i < eta.size(); ++i) l += dv[i] * log1m_logistic(eta[i]);
    return l;
  };

  const Eigen::Index q = fa.cols();
  PropensityModel model;
  model.features = std::move(features);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
  // Start the intercept at the logit of the crude proportion.
  const double share = static_cast<double>(x_b.rows()) / n_hat;
  if (share > 0.0 && share < 1.0) coef[0] = std::log(share / (1.0 - share));
  double max_eta = 0.0;
  double l = loglik(coef, max_eta);

  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd eta = fa * coef;
    Eigen::VectorXd score = b_sum;
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = logistic(eta[i]);
      score -= dv[i] * p * fa.row(i).transpose();
      info.noalias() += dv[i] * p * (1.0 - p) * fa.row(i).transpose() * fa.row(i);
    }
    model.gradient_norm = score.norm() / n_hat;
    model.iterations = it - 1;
    if (model.gradient_norm < options.tolerance) {
      model.coefficients = coef;
      model.log_likelihood = l;
      return model;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw ConvergenceError("propensity information matrix is singular", l);
    }
    const Eigen::VectorXd step = ldlt.solve(score);
    double t = 1.0;
    Eigen::VectorXd next = coef + step;
    double l_next = loglik(next, max_eta);
    for (int h = 0; h < 40 && !(l_next >= l); ++h) {
      t *= 0.5;
      next = coef + t * step;
      l_next = loglik(next, max_eta);
    }
    if (!std::isfinite(l_next) || max_eta > 700.0) {
      throw ConvergenceError("propensity linear predictor diverges "
                             "(separated data)", l);
    }
    coef = next;
    l = l_next;
  }
  throw ConvergenceError("propensity fit did not converge in " +
                             std::to_string(options.max_iterations) +
                             " iterations",
                         l);
}

PropensityModel fit_propensity(const ProbabilitySample& sample_a,
                               const BigSample& b_sample,
                               std::vector<std::size_t> features,
                               const PropensityOptions& options) {
  const std::vector<double> d = sample_a.design_weights();
  return fit_propensity(sample_a.frame.covariate_matrix(), d,
                        b_sample.frame.covariate_matrix(), std::move(features),
                        options);
}

}  // namespace massfuse
