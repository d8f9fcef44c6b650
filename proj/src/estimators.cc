#include "massfuse/estimators.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "massfuse/designs.h"
#include "massfuse/errors.h"

namespace massfuse {

namespace {

constexpr double kMinPropensity = 1e-6;

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd propensities_on(const PropensityModel& model,
                                const Frame& frame) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(frame.n_rows()));
  double min_p = 1.0;
  for (std::size_t i = 0; i < frame.n_rows(); ++i) {
    const double pi = model.probability(frame[i].x);
    p[static_cast<Eigen::Index>(i)] = pi;
    min_p = std::min(min_p, pi);
  }
  if (min_p < kMinPropensity) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", min_p);
    throw ExtremeWeightError(std::string("fitted selection probability ") + buf +
                             " below 1e-6");
  }
  return p;
}

Eigen::MatrixXd with_intercept_column(const RowMatrix& x) {
  Eigen::MatrixXd f(x.rows(), x.cols() + 1);
  f.col(0).setOnes();
  f.rightCols(x.cols()) = x;
  return f;
}

}  // namespace

struct Workspace::Values {
  Eigen::VectorXd on_b;
  // g on the A rows themselves; empty when A carries no outcomes.
  Eigen::VectorXd on_a;
};

struct Workspace::Linear {
  double point = 0.0;
  double variance = 0.0;
  std::map<std::string, double> diagnostics;
  std::map<std::string, std::string> notes;
};

struct Workspace::Cache {
  std::optional<MatchResult> nearest;
  std::optional<MatchResult> knn;
  std::optional<PropensityModel> propensity;
  Eigen::VectorXd p_b;
  std::optional<CalibrationResult> calibration;
  CalibrationSpec spec;
  Eigen::MatrixXd h_a;
  Eigen::MatrixXd h_b;
  std::vector<bool> delta_a;
  std::map<std::string, GamModel> gams;
  std::map<std::string, Eigen::VectorXd> gam_predictions;
  bool dr_ready = false;
  Eigen::MatrixXd f_a;
  Eigen::MatrixXd f_b;
  Eigen::LDLT<Eigen::MatrixXd> dr_normal;
  RowMatrix x_a;
  RowMatrix x_b;
};

Workspace::Workspace(const ProbabilitySample& sample_a, const BigSample& b_sample,
                     EstimatorOptions options)
    : a_(sample_a),
      b_(b_sample),
      options_(std::move(options)),
      d_(sample_a.design_weights()),
      n_pop_(static_cast<double>(sample_a.population_size)),
      cache_(std::make_unique<Cache>()) {
  if (a_.n() == 0) throw EmptyFrameError("probability sample is empty");
  if (b_.frame.n_covariates() != a_.frame.n_covariates()) {
    throw DimensionError("A has " + std::to_string(a_.frame.n_covariates()) +
                         " covariates but B has " +
                         std::to_string(b_.frame.n_covariates()));
  }
  cache_->x_a = a_.frame.covariate_matrix();
  cache_->x_b = b_.frame.covariate_matrix();
}

Workspace::~Workspace() = default;

const MatchResult& Workspace::nearest_match() {
  if (!cache_->nearest) {
    cache_->nearest = match_knn(cache_->x_a, cache_->x_b, 1, options_.match);
  }
  return *cache_->nearest;
}

const MatchResult& Workspace::knn_match() {
  if (!cache_->knn) {
    cache_->knn = match_knn(cache_->x_a, cache_->x_b, options_.k, options_.match);
  }
  return *cache_->knn;
}

const PropensityModel& Workspace::propensity() {
  if (!cache_->propensity) {
    std::vector<std::size_t> features;
    if (options_.propensity_features) {
      features = *options_.propensity_features;
    } else {
      for (std::size_t j = 0; j < a_.frame.n_covariates(); ++j) features.push_back(j);
    }
    PropensityModel m =
        fit_propensity(cache_->x_a, d_, cache_->x_b, std::move(features));
    cache_->p_b = propensities_on(m, b_.frame);
    cache_->propensity = std::move(m);
  }
  return *cache_->propensity;
}

const CalibrationResult& Workspace::calibration() {
  if (!cache_->calibration) {
    Cache& c = *cache_;
    c.spec = options_.calibration
                 ? *options_.calibration
                 : default_calibration_spec(a_.frame.n_covariates(), 0);
    if (c.spec.n_covariates != a_.frame.n_covariates()) {
      throw DimensionError("calibration map expects a different covariate count");
    }
    const Values y = values_of(IdentityG{c.spec.y_outcome});
    const std::vector<double> y_star =
        impute_values(nearest_match(), std::span<const double>(
                                           y.on_b.data(),
                                           static_cast<std::size_t>(y.on_b.size())));
    c.h_a = calibration_design(a_, y_star, c.spec);
    c.h_b = calibration_design(b_, c.spec);
    c.delta_a.resize(a_.n());
    for (std::size_t i = 0; i < a_.n(); ++i) c.delta_a[i] = a_.frame[i].delta_b;
    const Eigen::VectorXd targets =
        compute_benchmark(b_, a_.population_size, c.spec);
    c.calibration = calibrate_weights(to_eigen(d_), c.h_a, targets,
                                      c.spec.components, a_.population_size);
  }
  return *cache_->calibration;
}

const GamModel& Workspace::gam(const GFunction& g) {
  const std::string key = describe(g);
  auto it = cache_->gams.find(key);
  if (it == cache_->gams.end()) {
    it = cache_->gams.emplace(key, fit_gam(b_, g, options_.gam)).first;
  }
  return it->second;
}

Eigen::VectorXd Workspace::gam_predictions(const GFunction& g) {
  const std::string key = describe(g);
  auto it = cache_->gam_predictions.find(key);
  if (it == cache_->gam_predictions.end()) {
    it = cache_->gam_predictions.emplace(key, gam(g).predict(cache_->x_a)).first;
  }
  return it->second;
}

Workspace::Values Workspace::values_of(const GFunction& g) const {
  Values v;
  if (max_outcome_index(g) >= b_.frame.n_outcomes()) {
    throw IndexError("g reads outcome " + std::to_string(max_outcome_index(g)) +
                     " but B has " + std::to_string(b_.frame.n_outcomes()));
  }
  v.on_b = apply_g(g, b_.frame);
  if (a_.frame.n_outcomes() > max_outcome_index(g)) {
    v.on_a = apply_g(g, a_.frame);
  }
  return v;
}

double Workspace::weighted_mean(const Eigen::VectorXd& a_values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < d_.size(); ++i) {
    s += d_[i] * a_values[static_cast<Eigen::Index>(i)];
  }
  return s / n_pop_;
}

double Workspace::design_variance(const Eigen::VectorXd& a_values) const {
  return design_double_sum(a_.design, a_.units,
                           std::span<const double>(
                               a_values.data(),
                               static_cast<std::size_t>(a_values.size()))) /
         (n_pop_ * n_pop_);
}

Workspace::Linear Workspace::evaluate(Method method, const Values& v) {
  Linear out;
  switch (method) {
    case Method::kHt: {
      if (v.on_a.size() == 0) {
        throw ModelError("HT needs the outcomes observed on the probability "
                         "sample");
      }
      out.point = weighted_mean(v.on_a);
      out.variance = design_variance(v.on_a);
      break;
    }
    case Method::kNni:
    case Method::kKnn: {
      const MatchResult& m =
          method == Method::kNni ? nearest_match() : knn_match();
      const Eigen::VectorXd imputed = to_eigen(impute_values(
          m, std::span<const double>(v.on_b.data(),
                                     static_cast<std::size_t>(v.on_b.size()))));
      out.point = weighted_mean(imputed);
      out.variance = design_variance(imputed);
      double max_d = 0.0, sum_d = 0.0;
      for (double dist : m.distances) {
        max_d = std::max(max_d, dist);
        sum_d += dist;
      }
      out.diagnostics["k"] = static_cast<double>(m.k);
      out.diagnostics["mean_match_distance"] =
          sum_d / static_cast<double>(m.distances.size());
      out.diagnostics["max_match_distance"] = max_d;
      if (method == Method::kKnn) {
        out.notes["variance"] =
            "first-term plug-in; omits the within-neighbourhood variance term";
      }
      break;
    }
    case Method::kRc: {
      const CalibrationResult& cal = calibration();
      const Cache& c = *cache_;
      const std::vector<double> g_star = impute_values(
          nearest_match(),
          std::span<const double>(v.on_b.data(),
                                  static_cast<std::size_t>(v.on_b.size())));
      const Eigen::VectorXd gs = to_eigen(g_star);
      out.point = cal.omega.dot(gs) / n_pop_;
      const Eigen::VectorXd beta =
          beta_hat(c.h_b,
                   std::span<const double>(v.on_b.data(),
                                           static_cast<std::size_t>(v.on_b.size())),
                   c.h_a, c.delta_a, d_, g_star, a_.population_size, c.spec);
      const Eigen::VectorXd e = gs - c.h_a * beta;
      out.variance = design_variance(e);
      out.diagnostics["negative_weights"] =
          static_cast<double>(cal.negative_weights);
      out.diagnostics["max_relative_violation"] = cal.max_relative_violation;
      out.diagnostics["vacuous_components"] =
          static_cast<double>(cal.vacuous_components.size());
      out.diagnostics["calibration_distance"] = cal.distance;
      break;
    }
    case Method::kIpw: {
      const PropensityModel& ps = propensity();
      const Eigen::VectorXd& p = cache_->p_b;
      double total = 0.0, var = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        total += v.on_b[i] / p[i];
        var += (1.0 - p[i]) / (p[i] * p[i]) * v.on_b[i] * v.on_b[i];
      }
      out.point = total / n_pop_;
      out.variance = var / (n_pop_ * n_pop_);
      out.diagnostics["min_propensity"] = p.size() > 0 ? p.minCoeff() : 1.0;
      out.diagnostics["propensity_iterations"] = ps.iterations;
      out.notes["variance"] = "approximate: plug-in with the propensity fixed";
      break;
    }
    case Method::kDr: {
      propensity();
      Cache& c = *cache_;
      if (!c.dr_ready) {
        c.f_a = with_intercept_column(c.x_a);
        c.f_b = with_intercept_column(c.x_b);
        c.dr_normal.compute(c.f_b.transpose() * c.f_b);
        if (c.dr_normal.info() != Eigen::Success ||
            !(c.dr_normal.vectorD().minCoeff() > 0.0)) {
          throw RankError("outcome working-model design is singular on B");
        }
        c.dr_ready = true;
      }
      const Eigen::VectorXd beta = c.dr_normal.solve(c.f_b.transpose() * v.on_b);
      const Eigen::VectorXd resid = v.on_b - c.f_b * beta;
      const Eigen::VectorXd m_a = c.f_a * beta;
      const Eigen::VectorXd& p = c.p_b;
      double total = 0.0, var_b = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        total += resid[i] / p[i];
        var_b += (1.0 - p[i]) / (p[i] * p[i]) * resid[i] * resid[i];
      }
      out.point = total / n_pop_ + weighted_mean(m_a);
      out.variance = var_b / (n_pop_ * n_pop_) + design_variance(m_a);
      out.diagnostics["min_propensity"] = p.size() > 0 ? p.minCoeff() : 1.0;
      out.notes["variance"] =
          "approximate: plug-in with both working models fixed";
      break;
    }
    case Method::kGam:
      throw ModelError("GAM is not linear in g");
  }
  return out;
}

EstimateReport Workspace::finish(Method method, const Linear& lin) const {
  EstimateReport r = make_report(method, lin.point, lin.variance);
  for (const auto& [k, v] : lin.diagnostics) r.diagnostics[k] = v;
  for (const auto& [k, v] : lin.notes) r.notes[k] = v;
  return r;
}

EstimateReport Workspace::estimate(Method method, const GFunction& g) {
  if (method == Method::kGam) {
    const GamModel& model = gam(g);
    const Eigen::VectorXd pred = gam_predictions(g);
    Linear lin;
    lin.point = weighted_mean(pred);
    lin.variance = design_variance(pred);
    const GamDiagnostics& gd = model.diagnostics();
    lin.diagnostics["lambda"] = model.lambda(0);
    lin.diagnostics["edf"] = gd.edf;
    lin.diagnostics["gcv"] = gd.gcv;
    lin.diagnostics["deviance"] = gd.deviance;
    lin.diagnostics["iterations"] = gd.iterations;
    lin.diagnostics["ridge"] = gd.ridge;
    lin.notes["link"] = model.link() == Link::kLogit ? "logit" : "identity";
    return finish(method, lin);
  }
  return finish(method, evaluate(method, values_of(g)));
}

EstimateReport Workspace::estimate_ratio(Method method,
                                         const GFunction& numerator,
                                         const GFunction& denominator) {
  auto check_den = [](double den) {
    if (!(den > 0.0)) {
      throw RatioUndefinedError("denominator estimate " + std::to_string(den) +
                                " is not positive");
    }
  };
  Linear lin;
  if (method == Method::kGam) {
    const Eigen::VectorXd p_num = gam_predictions(numerator);
    const Eigen::VectorXd p_den = gam_predictions(denominator);
    const double num = weighted_mean(p_num), den = weighted_mean(p_den);
    check_den(den);
    lin.point = num / den;
    lin.variance = design_variance((p_num - lin.point * p_den) / den);
    lin.diagnostics["numerator"] = num;
    lin.diagnostics["denominator"] = den;
    return finish(method, lin);
  }
  const Values vn = values_of(numerator);
  const Values vd = values_of(denominator);
  const Linear ln = evaluate(method, vn);
  const Linear ld = evaluate(method, vd);
  check_den(ld.point);
  const double ratio = ln.point / ld.point;
  Values z;
  z.on_b = (vn.on_b - ratio * vd.on_b) / ld.point;
  if (vn.on_a.size() > 0 && vd.on_a.size() > 0) {
    z.on_a = (vn.on_a - ratio * vd.on_a) / ld.point;
  }
  lin = evaluate(method, z);
  lin.point = ratio;
  lin.diagnostics["numerator"] = ln.point;
  lin.diagnostics["denominator"] = ld.point;
  return finish(method, lin);
}

// ---------------------------------------------------------------------------
// Single-shot wrappers.

EstimateReport estimate_ht(const ProbabilitySample& sample, const GFunction& g) {
  if (sample.frame.n_outcomes() <= max_outcome_index(g)) {
    throw ModelError("HT needs the outcomes observed on the probability sample");
  }
  const Eigen::VectorXd v = apply_g(g, sample.frame);
  const double n_pop = static_cast<double>(sample.population_size);
  double s = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    s += v[static_cast<Eigen::Index>(i)] / sample.pi[i];
  }
  const double var =
      design_double_sum(sample.design, sample.units,
                        std::span<const double>(v.data(),
                                                static_cast<std::size_t>(v.size()))) /
      (n_pop * n_pop);
  return make_report(Method::kHt, s / n_pop, var);
}

EstimateReport estimate_nni(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g) {
  Workspace ws(sample_a, b_sample);
  return ws.estimate(Method::kNni, g);
}

EstimateReport estimate_knn(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g,
                            std::size_t k) {
  EstimatorOptions o;
  o.k = k;
  Workspace ws(sample_a, b_sample, o);
  return ws.estimate(Method::kKnn, g);
}

EstimateReport estimate_gam(const ProbabilitySample& sample_a,
                            const BigSample& b_sample, const GFunction& g,
                            const GamConfig& config) {
  EstimatorOptions o;
  o.gam = config;
  Workspace ws(sample_a, b_sample, o);
  return ws.estimate(Method::kGam, g);
}

EstimateReport estimate_rc(const ProbabilitySample& sample_a,
                           const BigSample& b_sample, const GFunction& g,
                           const CalibrationSpec& spec) {
  EstimatorOptions o;
  o.calibration = spec;
  Workspace ws(sample_a, b_sample, o);
  return ws.estimate(Method::kRc, g);
}

EstimateReport estimate_ipw(const BigSample& b_sample,
                            const PropensityModel& propensity,
                            std::size_t population_size, const GFunction& g) {
  if (population_size == 0) throw DimensionError("population size is 0");
  const Eigen::VectorXd p = propensities_on(propensity, b_sample.frame);
  const Eigen::VectorXd v = apply_g(g, b_sample.frame);
  const double n_pop = static_cast<double>(population_size);
  double total = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    total += v[i] / p[i];
    var += (1.0 - p[i]) / (p[i] * p[i]) * v[i] * v[i];
  }
  EstimateReport r = make_report(Method::kIpw, total / n_pop, var / (n_pop * n_pop));
  r.diagnostics["min_propensity"] = p.size() > 0 ? p.minCoeff() : 1.0;
  r.notes["variance"] = "approximate: plug-in with the propensity fixed";
  return r;
}

EstimateReport estimate_dr(const ProbabilitySample& sample_a,
                           const BigSample& b_sample,
                           const PropensityModel& propensity,
                           const GFunction& g) {
  const RowMatrix x_a = sample_a.frame.covariate_matrix();
  const RowMatrix x_b = b_sample.frame.covariate_matrix();
  const Eigen::MatrixXd f_a = with_intercept_column(x_a);
  const Eigen::MatrixXd f_b = with_intercept_column(x_b);
  const Eigen::VectorXd y = apply_g(g, b_sample.frame);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f_b);
  if (qr.rank() < f_b.cols()) {
    throw RankError("outcome working-model design is singular on B");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd p = propensities_on(propensity, b_sample.frame);
  const Eigen::VectorXd resid = y - f_b * beta;
  const Eigen::VectorXd m_a = f_a * beta;
  const double n_pop = static_cast<double>(sample_a.population_size);
  double total = 0.0, var_b = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    total += resid[i] / p[i];
    var_b += (1.0 - p[i]) / (p[i] * p[i]) * resid[i] * resid[i];
  }
  double a_total = 0.0;
  for (std::size_t i = 0; i < sample_a.n(); ++i) {
    a_total += m_a[static_cast<Eigen::Index>(i)] / sample_a.pi[i];
  }
  const double var_a =
      design_double_sum(sample_a.design, sample_a.units,
                        std::span<const double>(m_a.data(),
                                                static_cast<std::size_t>(m_a.size())));
  EstimateReport r = make_report(Method::kDr, (total + a_total) / n_pop,
                                 (var_b + var_a) / (n_pop * n_pop));
  r.notes["variance"] = "approximate: plug-in with both working models fixed";
  return r;
}

EstimateReport estimate_conditional_mean(Method method,
                                         const ProbabilitySample& sample_a,
                                         const BigSample& b_sample,
                                         const GFunction& numerator,
                                         const GFunction& denominator,
                                         const EstimatorOptions& options) {
  Workspace ws(sample_a, b_sample, options);
  return ws.estimate_ratio(method, numerator, denominator);
}

}  // namespace massfuse
