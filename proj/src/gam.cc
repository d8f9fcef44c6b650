#include "massfuse/gam.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double inverse_link(Link link, double eta) {
  return link == Link::kIdentity ? eta : logistic(eta);
}

double unit_deviance_eta(Link link, double y, double eta) {
  if (link == Link::kIdentity) {
    const double r = y - eta;
    return r * r;
  }
  // -2 [y log mu + (1 - y) log(1 - mu)]
  return 2.0 * (y * softplus(-eta) + (1.0 - y) * softplus(eta));
}

}  // namespace

double deviance(Link link, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  if (y.size() != mu.size()) throw DimensionError("deviance: length mismatch");
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (link == Link::kIdentity) {
      d += (y[i] - mu[i]) * (y[i] - mu[i]);
    } else {
      const double m = mu[i];
      if (y[i] > 0.0) d -= 2.0 * y[i] * std::log(m);
      if (y[i] < 1.0) d -= 2.0 * (1.0 - y[i]) * std::log1p(-m);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// GamModel

Eigen::VectorXd GamModel::gamma(std::size_t k) const {
  return coefficients_.segment(static_cast<Eigen::Index>(offsets_.at(k)),
                               static_cast<Eigen::Index>(blocks_.at(k).size));
}

std::size_t GamModel::block_nonzero(std::size_t k, double x,
                                    std::span<double> out,
                                    std::size_t& count) const {
  const Block& b = blocks_[k];
  if (basis_kind_ == BasisKind::kLinear) {
    out[0] = std::clamp(x, b.lo, b.hi);
    count = 1;
    return 0;
  }
  count = static_cast<std::size_t>(b.basis.degree()) + 1;
  return b.basis.evaluate_nonzero(x, out);
}

Eigen::VectorXd GamModel::design_row(std::span<const double> x) const {
  if (x.size() != blocks_.size()) {
    throw DimensionError("model has " + std::to_string(blocks_.size()) +
                         " covariates, got " + std::to_string(x.size()));
  }
  Eigen::VectorXd row = Eigen::VectorXd::Zero(coefficients_.size());
  row[0] = 1.0;
  std::vector<double> buf(16);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (buf.size() < blocks_[k].size + 1) buf.resize(blocks_[k].size + 1);
    std::size_t count = 0;
    const std::size_t first = block_nonzero(k, x[k], buf, count);
    for (std::size_t j = 0; j < count; ++j) {
      row[static_cast<Eigen::Index>(offsets_[k] + first + j)] = buf[j];
    }
  }
  return row;
}

double GamModel::predict_link(std::span<const double> x,
                              const Eigen::VectorXd& coefficients) const {
  if (x.size() != blocks_.size()) {
    throw DimensionError("model has " + std::to_string(blocks_.size()) +
                         " covariates, got " + std::to_string(x.size()));
  }
  double eta = coefficients[0];
  double buf[16];
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    std::size_t count = 0;
    const std::size_t first = block_nonzero(k, x[k], buf, count);
    for (std::size_t j = 0; j < count; ++j) {
      eta += coefficients[static_cast<Eigen::Index>(offsets_[k] + first + j)] *
             buf[j];
    }
  }
  return eta;
}

double GamModel::predict_link(std::span<const double> x) const {
  return predict_link(x, coefficients_);
}

double GamModel::predict(std::span<const double> x) const {
  return inverse_link(link_, predict_link(x));
}

Eigen::VectorXd GamModel::predict(const RowMatrix& x) const {
  const auto p = static_cast<std::size_t>(x.cols());
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = predict(std::span<const double>(x.row(i).data(), p));
  }
  return out;
}

Eigen::MatrixXd GamModel::penalty_matrix() const {
  const Eigen::Index q = coefficients_.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(offsets_[k]);
    const auto m = static_cast<Eigen::Index>(blocks_[k].size);
    P.block(o, o, m, m) = lambdas_[k] * blocks_[k].penalty;
  }
  return P;
}

double GamModel::penalized_objective(const RowMatrix& x,
                                     const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& coefficients) const {
  if (x.rows() != y.size()) throw DimensionError("x and y differ in rows");
  const auto p = static_cast<std::size_t>(x.cols());
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta =
        predict_link(std::span<const double>(x.row(i).data(), p), coefficients);
    d += unit_deviance_eta(link_, y[i], eta);
  }
  return d + coefficients.dot(penalty_matrix() * coefficients);
}

Eigen::VectorXd GamModel::penalized_gradient(
    const RowMatrix& x, const Eigen::VectorXd& y,
    const Eigen::VectorXd& coefficients) const {
  if (x.rows() != y.size()) throw DimensionError("x and y differ in rows");
  const auto p = static_cast<std::size_t>(x.cols());
  Eigen::VectorXd grad = 2.0 * (penalty_matrix() * coefficients);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::span<const double> xi(x.row(i).data(), p);
    const double mu = inverse_link(link_, predict_link(xi, coefficients));
    grad -= 2.0 * (y[i] - mu) * design_row(xi);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Fitting

class GamFitter {
 public:
  GamFitter(const RowMatrix& x, const Eigen::VectorXd& y,
            const GamConfig& config);

  GamModel run();

 private:
  struct State {
    Eigen::VectorXd theta;
    Eigen::VectorXd eta;
    double deviance = 0.0;
    double penalized = 0.0;
    double edf = 0.0;
    double ridge = 0.0;
    int iterations = 0;
  };

  void set_lambdas(const std::vector<double>& lambdas);
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& theta) const;
  double total_deviance(const Eigen::VectorXd& eta) const;
  // Accumulates A'WA and A'Wz.
  void accumulate(const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                  Eigen::MatrixXd& gram, Eigen::VectorXd& rhs) const;
  // Solves the penalized normal equations; returns the ridge used.
  double solve(const Eigen::MatrixXd& normal, const Eigen::VectorXd& rhs,
               Eigen::VectorXd& theta, Eigen::MatrixXd* inverse_times,
               const Eigen::MatrixXd* times) const;
  State fit(const State* warm) const;

  const RowMatrix& x_;
  const Eigen::VectorXd& y_;
  GamConfig config_;
  GamModel model_;
  std::size_t n_ = 0;
  std::size_t q_ = 0;  // full coefficient length
  std::size_t r_ = 0;  // reduced (identifiable) coefficient length
  std::size_t nnz_ = 0;
  std::vector<Eigen::Index> cols_;  // n_ x nnz_
  std::vector<double> vals_;
  Eigen::MatrixXd transform_;       // q_ x r_
  std::vector<Eigen::MatrixXd> block_penalty_;
  std::vector<Eigen::Index> reduced_offsets_;
  Eigen::MatrixXd penalty_;         // r_ x r_ at the current lambdas
};

GamFitter::GamFitter(const RowMatrix& x, const Eigen::VectorXd& y,
                     const GamConfig& config)
    : x_(x), y_(y), config_(config) {
  n_ = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (n_ == 0 || p == 0) throw ModelError("GAM needs rows and covariates");
  if (static_cast<std::size_t>(y.size()) != n_) {
    throw DimensionError("x and y differ in rows");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw ModelError("non-finite response");
  }
  bool binary = true;
  for (Eigen::Index i = 0; i < y.size() && binary; ++i) {
    binary = y[i] == 0.0 || y[i] == 1.0;
  }
  model_.link_ = config.link.value_or(binary ? Link::kLogit : Link::kIdentity);
  if (model_.link_ == Link::kLogit && !binary) {
    throw ModelError("logit link needs responses in {0, 1}");
  }
  if (config.max_iterations < 1) throw ModelError("max_iterations must be >= 1");
  model_.basis_kind_ = config.basis_kind;

  // Column blocks and their penalties.
  std::size_t offset = 1;
  for (std::size_t k = 0; k < p; ++k) {
    GamModel::Block b;
    std::vector<double> col(n_);
    for (std::size_t i = 0; i < n_; ++i) col[i] = x(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(k));
    if (config.basis_kind == BasisKind::kBSpline) {
      b.basis = SplineBasis::build(col, config.basis_size, config.degree);
      b.size = b.basis.size();
      b.penalty = massfuse::penalty_matrix(b.basis);
    } else {
      b.size = 1;
      b.penalty = Eigen::MatrixXd::Zero(1, 1);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      b.lo = *lo;
      b.hi = *hi;
    }
    model_.offsets_.push_back(offset);
    offset += b.size;
    model_.blocks_.push_back(std::move(b));
  }
  q_ = offset;

  // Sparse rows of the uncentred design A.
  nnz_ = 1;
  for (const auto& b : model_.blocks_) {
    nnz_ += config.basis_kind == BasisKind::kBSpline
                ? static_cast<std::size_t>(b.basis.degree()) + 1
                : 1;
  }
  cols_.resize(n_ * nnz_);
  vals_.resize(n_ * nnz_);
  Eigen::VectorXd col_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q_));
  std::vector<double> buf(nnz_);
  for (std::size_t i = 0; i < n_; ++i) {
    Eigen::Index* c = cols_.data() + i * nnz_;
    double* v = vals_.data() + i * nnz_;
    std::size_t pos = 0;
    c[pos] = 0;
    v[pos++] = 1.0;
    for (std::size_t k = 0; k < p; ++k) {
      std::size_t count = 0;
      const std::size_t first = model_.block_nonzero(
          k, x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), buf,
          count);
      for (std::size_t j = 0; j < count; ++j) {
        c[pos] = static_cast<Eigen::Index>(model_.offsets_[k] + first + j);
        v[pos++] = buf[j];
      }
    }
    for (std::size_t j = 0; j < nnz_; ++j) col_mean[c[j]] += v[j];
  }
  col_mean /= static_cast<double>(n_);

  // theta -> full coefficients. Spline blocks are restricted to the
  // orthogonal complement of the constant vector (their columns sum to one,
  // so the constant is carried by the intercept); centring moves the block
  // means into the intercept row.
  r_ = 1;
  std::vector<Eigen::MatrixXd> q_blocks;
  for (const auto& b : model_.blocks_) {
    const auto m = static_cast<Eigen::Index>(b.size);
    Eigen::MatrixXd Q;
    if (config.basis_kind == BasisKind::kBSpline) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(m, 1));
      const Eigen::MatrixXd full = qr.householderQ();
      Q = full.rightCols(m - 1);
    } else {
      Q = Eigen::MatrixXd::Identity(1, 1);
    }
    reduced_offsets_.push_back(static_cast<Eigen::Index>(r_));
    r_ += static_cast<std::size_t>(Q.cols());
    q_blocks.push_back(std::move(Q));
  }
  transform_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q_),
                                     static_cast<Eigen::Index>(r_));
  transform_(0, 0) = 1.0;
  for (std::size_t k = 0; k < p; ++k) {
    const auto o = static_cast<Eigen::Index>(model_.offsets_[k]);
    const Eigen::MatrixXd& Q = q_blocks[k];
    const Eigen::Index ro = reduced_offsets_[k];
    transform_.block(o, ro, Q.rows(), Q.cols()) = Q;
    transform_.block(0, ro, 1, Q.cols()) =
        -(col_mean.segment(o, Q.rows()).transpose() * Q);
    block_penalty_.push_back(Q.transpose() * model_.blocks_[k].penalty * Q);
  }
}

void GamFitter::set_lambdas(const std::vector<double>& lambdas) {
  model_.lambdas_ = lambdas;
  penalty_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r_),
                                   static_cast<Eigen::Index>(r_));
  for (std::size_t k = 0; k < block_penalty_.size(); ++k) {
    const Eigen::Index o = reduced_offsets_[k];
    const Eigen::Index m = block_penalty_[k].rows();
    penalty_.block(o, o, m, m) = lambdas[k] * block_penalty_[k];
  }
}

Eigen::VectorXd GamFitter::linear_predictor(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd beta = transform_ * theta;
  Eigen::VectorXd eta(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    const Eigen::Index* c = cols_.data() + i * nnz_;
    const double* v = vals_.data() + i * nnz_;
    double e = 0.0;
    for (std::size_t j = 0; j < nnz_; ++j) e += beta[c[j]] * v[j];
    eta[static_cast<Eigen::Index>(i)] = e;
  }
  return eta;
}

double GamFitter::total_deviance(const Eigen::VectorXd& eta) const {
  double d = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    d += unit_deviance_eta(model_.link_, y_[ii], eta[ii]);
  }
  return d;
}

void GamFitter::accumulate(const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                           Eigen::MatrixXd& gram, Eigen::VectorXd& rhs) const {
  gram.setZero(static_cast<Eigen::Index>(q_), static_cast<Eigen::Index>(q_));
  rhs.setZero(static_cast<Eigen::Index>(q_));
  for (std::size_t i = 0; i < n_; ++i) {
    const Eigen::Index* c = cols_.data() + i * nnz_;
    const double* v = vals_.data() + i * nnz_;
    const auto ii = static_cast<Eigen::Index>(i);
    const double wi = w[ii];
    for (std::size_t a = 0; a < nnz_; ++a) {
      const double wa = wi * v[a];
      rhs[c[a]] += wa * z[ii];
      for (std::size_t b = 0; b < nnz_; ++b) gram(c[a], c[b]) += wa * v[b];
    }
  }
}

double GamFitter::solve(const Eigen::MatrixXd& normal,
                        const Eigen::VectorXd& rhs, Eigen::VectorXd& theta,
                        Eigen::MatrixXd* inverse_times,
                        const Eigen::MatrixXd* times) const {
  auto usable = [](const Eigen::LDLT<Eigen::MatrixXd>& f) {
    if (f.info() != Eigen::Success) return false;
    const Eigen::VectorXd d = f.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    return d.allFinite() && dmax > 0.0 && d.minCoeff() > 1e-13 * dmax;
  };
  double ridge = 0.0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (!usable(ldlt)) {
    ridge = 1e-10 * normal.diagonal().cwiseAbs().mean();
    if (!(ridge > 0.0)) ridge = 1e-10;
    Eigen::MatrixXd ridged = normal;
    ridged.diagonal().array() += ridge;
    ldlt.compute(ridged);
    if (!usable(ldlt)) {
      throw RankError("penalized normal matrix is singular after ridge");
    }
  }
  theta = ldlt.solve(rhs);
  if (!theta.allFinite()) throw RankError("penalized solve produced non-finite values");
  if (inverse_times != nullptr) *inverse_times = ldlt.solve(*times);
  return ridge;
}

GamFitter::State GamFitter::fit(const State* warm) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const Link link = model_.link_;
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  Eigen::VectorXd w(n), z(n);
  State s;

  auto reduced_normal = [&](Eigen::MatrixXd& xtwx) {
    xtwx = transform_.transpose() * gram * transform_;
    return Eigen::MatrixXd(xtwx + penalty_);
  };
  auto finish = [&](State& st, const Eigen::MatrixXd& normal,
                    const Eigen::MatrixXd& xtwx) {
    // tr(H) = tr((X'WX + P)^-1 X'WX) at the final weights.
    Eigen::MatrixXd inv_xtwx;
    Eigen::VectorXd unused;
    solve(normal, transform_.transpose() * rhs, unused, &inv_xtwx, &xtwx);
    st.edf = inv_xtwx.trace();
  };

  if (link == Link::kIdentity) {
    w.setOnes();
    accumulate(w, y_, gram, rhs);
    Eigen::MatrixXd xtwx;
    const Eigen::MatrixXd normal = reduced_normal(xtwx);
    s.ridge = solve(normal, transform_.transpose() * rhs, s.theta, nullptr, nullptr);
    s.eta = linear_predictor(s.theta);
    s.deviance = total_deviance(s.eta);
    s.penalized = s.deviance + s.theta.dot(penalty_ * s.theta);
    s.iterations = 1;
    finish(s, normal, xtwx);
    return s;
  }

  Eigen::VectorXd eta(n);
  Eigen::VectorXd theta_old;
  double pen_old = std::numeric_limits<double>::infinity();
  if (warm != nullptr) {
    theta_old = warm->theta;
    eta = linear_predictor(theta_old);
    pen_old = total_deviance(eta) + theta_old.dot(penalty_ * theta_old);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = (y_[i] + 0.5) / 2.0;
      eta[i] = std::log(mu / (1.0 - mu));
    }
  }

  for (int it = 1; it <= config_.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = logistic(eta[i]);
      const double wi = std::max(mu * (1.0 - mu), 1e-12);
      w[i] = wi;
      z[i] = eta[i] + (y_[i] - mu) / wi;
    }
    accumulate(w, z, gram, rhs);
    Eigen::MatrixXd xtwx;
    const Eigen::MatrixXd normal = reduced_normal(xtwx);
    Eigen::VectorXd theta;
    const double ridge =
        solve(normal, transform_.transpose() * rhs, theta, nullptr, nullptr);
    Eigen::VectorXd eta_new = linear_predictor(theta);
    double pen_new = total_deviance(eta_new) + theta.dot(penalty_ * theta);
    bool stalled = false;
    if (theta_old.size() > 0) {
      const double full_step = (theta - theta_old).norm();
      // Step halving keeps the penalized deviance from increasing.
      for (int h = 0; h < 30 && !(pen_new <= pen_old * (1.0 + 1e-12)); ++h) {
        theta = 0.5 * (theta + theta_old);
        eta_new = linear_predictor(theta);
        pen_new = total_deviance(eta_new) + theta.dot(penalty_ * theta);
      }
      if (!(pen_new <= pen_old * (1.0 + 1e-12))) {
        // Near the optimum a small Newton step can fail to decrease the
        // objective by rounding alone; keep the previous iterate then.
        if (!(full_step < 1e-4 * std::max(1.0, theta_old.norm()))) {
          throw ConvergenceError("P-IRLS step halving failed",
                                 total_deviance(eta_new));
        }
        stalled = true;
        theta = theta_old;
        eta_new = eta;
        pen_new = pen_old;
      }
    }
    const bool converged =
        theta_old.size() > 0 &&
        (stalled || (theta - theta_old).norm() <
                        config_.tolerance * std::max(1.0, theta.norm()));
    theta_old = theta;
    eta = eta_new;
    pen_old = pen_new;
    s.ridge = ridge;
    s.iterations = it;
    if (converged) {
      s.theta = theta;
      s.eta = eta;
      s.deviance = total_deviance(eta);
      s.penalized = pen_new;
      // Weights at the converged fit for the influence trace.
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = logistic(eta[i]);
        w[i] = std::max(mu * (1.0 - mu), 1e-12);
        z[i] = eta[i] + (y_[i] - mu) / w[i];
      }
      accumulate(w, z, gram, rhs);
      Eigen::MatrixXd xtwx2;
      const Eigen::MatrixXd normal2 = reduced_normal(xtwx2);
      finish(s, normal2, xtwx2);
      return s;
    }
  }
  throw ConvergenceError("P-IRLS did not converge in " +
                             std::to_string(config_.max_iterations) +
                             " iterations",
                         total_deviance(eta));
}

GamModel GamFitter::run() {
  const std::size_t p = model_.blocks_.size();
  GamDiagnostics diag;
  State best;
  bool have_best = false;
  if (!config_.lambdas.empty() || config_.lambda) {
    std::vector<double> lambdas =
        config_.lambdas.empty() ? std::vector<double>(p, *config_.lambda)
                                : config_.lambdas;
    if (lambdas.size() != p) {
      throw ModelError("need one smoothing parameter per covariate");
    }
    for (double l : lambdas) {
      if (!(l >= 0.0) || !std::isfinite(l)) {
        throw ModelError("smoothing parameters must be finite and >= 0");
      }
    }
    set_lambdas(lambdas);
    best = fit(nullptr);
    have_best = true;
  } else {
    const std::size_t g = config_.grid_size;
    if (g < 2 || !(config_.grid_min > 0.0) ||
        !(config_.grid_max > config_.grid_min)) {
      throw ModelError("invalid smoothing-parameter grid");
    }
    diag.grid_lambda.resize(g);
    diag.grid_gcv.assign(g, std::numeric_limits<double>::infinity());
    diag.grid_edf.assign(g, std::numeric_limits<double>::quiet_NaN());
    const double l0 = std::log(config_.grid_min), l1 = std::log(config_.grid_max);
    for (std::size_t i = 0; i < g; ++i) {
      diag.grid_lambda[i] =
          std::exp(l0 + (l1 - l0) * static_cast<double>(i) /
                            static_cast<double>(g - 1));
    }
    const double n = static_cast<double>(n_);
    State warm;
    bool have_warm = false;
    double best_gcv = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    double last_deviance = std::numeric_limits<double>::quiet_NaN();
    // Large to small: heavily smoothed fits are the easiest starting points.
    for (std::size_t gi = g; gi-- > 0;) {
      set_lambdas(std::vector<double>(p, diag.grid_lambda[gi]));
      try {
        State s = fit(have_warm ? &warm : nullptr);
        const double denom = n - s.edf;
        const double score = denom > 0.0
                                 ? n * s.deviance / (denom * denom)
                                 : std::numeric_limits<double>::infinity();
        diag.grid_gcv[gi] = score;
        diag.grid_edf[gi] = s.edf;
        if (score <= best_gcv) {
          best_gcv = score;
          best_lambda = diag.grid_lambda[gi];
          best = s;
          have_best = true;
        }
        warm = std::move(s);
        have_warm = true;
      } catch (const ConvergenceError& e) {
        last_deviance = e.last_value();
      } catch (const RankError&) {
      }
    }
    if (!have_best) {
      throw ConvergenceError("GAM fit failed at every smoothing parameter",
                             last_deviance);
    }
    set_lambdas(std::vector<double>(p, best_lambda));
  }

  const double n = static_cast<double>(n_);
  diag.deviance = best.deviance;
  diag.penalized_deviance = best.penalized;
  diag.edf = best.edf;
  diag.gcv = n - best.edf > 0.0
                 ? n * best.deviance / ((n - best.edf) * (n - best.edf))
                 : std::numeric_limits<double>::infinity();
  diag.iterations = best.iterations;
  diag.ridge = best.ridge;
  model_.coefficients_ = transform_ * best.theta;
  model_.fitted_.resize(best.eta.size());
  for (Eigen::Index i = 0; i < best.eta.size(); ++i) {
    model_.fitted_[i] = inverse_link(model_.link_, best.eta[i]);
  }
  model_.diagnostics_ = std::move(diag);
  return std::move(model_);
}

GamModel fit_gam(const RowMatrix& x, const Eigen::VectorXd& y,
                 const GamConfig& config) {
  GamFitter fitter(x, y, config);
  return fitter.run();
}

GamModel fit_gam(const BigSample& b_sample, const GFunction& g,
                 const GamConfig& config) {
  if (b_sample.frame.empty()) throw ModelError("big-data sample is empty");
  return fit_gam(b_sample.frame.covariate_matrix(), apply_g(g, b_sample.frame),
                 config);
}

}  // namespace massfuse
