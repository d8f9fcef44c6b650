#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "massfuse/errors.h"
#include "massfuse/gam.h"
#include "massfuse/sample.h"
#include "oracles.h"
#include "test_support.h"

using namespace massfuse;

using oracles::constrained_design;
using oracles::expand;
using oracles::newton_logistic;
using oracles::smooth_data;
using Data = oracles::GamData;

TEST_CASE("linear basis fits collinear points exactly") {
  RowMatrix x(3, 1);
  x << 0.0, 1.0, 2.0;
  Eigen::VectorXd y(3);
  y << 1.0, 3.0, 5.0;
  GamConfig cfg;
  cfg.basis_kind = BasisKind::kLinear;
  cfg.lambda = 0.0;
  const GamModel m = fit_gam(x, y, cfg);
  for (double v : {-1.0, 0.0, 0.5, 2.0, 3.0}) {
    const std::vector<double> xv = {v};
    CHECK(m.predict(xv) == doctest::Approx(2.0 * std::clamp(v, 0.0, 2.0) + 1.0).epsilon(1e-12));
  }
  CHECK(m.coefficients()[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("unpenalized logit fit matches a Newton GLM solver") {
  Rng rng(1);
  const Data d = smooth_data(500, true, rng);
  GamConfig cfg;
  cfg.basis_size = 6;
  cfg.lambda = 0.0;
  const GamModel m = fit_gam(d.x, d.y, cfg);
  CHECK(m.link() == Link::kLogit);
  std::vector<std::size_t> sizes;
  const Eigen::MatrixXd X = constrained_design(m, d.x, sizes);
  const Eigen::VectorXd oracle = expand(newton_logistic(X, d.y), sizes);
  REQUIRE(oracle.size() == m.coefficients().size());
  for (Eigen::Index j = 0; j < oracle.size(); ++j) {
    CHECK(std::abs(m.coefficients()[j] - oracle[j]) < 1e-6);
  }
}

TEST_CASE("block coefficients sum to zero") {
  Rng rng(2);
  const Data d = smooth_data(300, false, rng);
  const GamModel m = fit_gam(d.x, d.y);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(m.gamma(k).sum()) < 1e-10);
}

TEST_CASE("gradient at the fit matches finite differences and vanishes") {
  Rng rng(3);
  const Data d = smooth_data(400, false, rng);
  const GamModel m = fit_gam(d.x, d.y);
  const Eigen::VectorXd c = m.coefficients();
  const double obj = m.penalized_objective(d.x, d.y, c);
  const Eigen::VectorXd g = m.penalized_gradient(d.x, d.y, c);
  CHECK(g.norm() < 1e-6 * (1.0 + std::abs(obj)));
  // Finite differences at a perturbed point, where the gradient is large.
  Eigen::VectorXd p = c;
  for (Eigen::Index j = 0; j < p.size(); ++j) p[j] += 0.1 * rng.normal();
  const Eigen::VectorXd gp = m.penalized_gradient(d.x, d.y, p);
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = 1e-5;
    Eigen::VectorXd a = p, b = p;
    a[j] += h;
    b[j] -= h;
    const double fd = (m.penalized_objective(d.x, d.y, a) -
                       m.penalized_objective(d.x, d.y, b)) / (2.0 * h);
    CHECK(std::abs(fd - gp[j]) <= 1e-5 * std::max(1.0, std::abs(gp[j])));
  }
}

TEST_CASE("logit fit is a constrained minimum of the penalized deviance") {
  Rng rng(4);
  const Data d = smooth_data(400, true, rng);
  const GamModel m = fit_gam(d.x, d.y);
  const Eigen::VectorXd c = m.coefficients();
  const double best = m.penalized_objective(d.x, d.y, c);
  CHECK(m.penalized_gradient(d.x, d.y, c).norm() < 1e-5 * (1.0 + best));
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd p = c;
    for (Eigen::Index j = 0; j < p.size(); ++j) p[j] += 0.01 * rng.normal();
    CHECK(m.penalized_objective(d.x, d.y, p) >= best - 1e-9);
  }
}

TEST_CASE("effective degrees of freedom decrease along the grid") {
  Rng rng(5);
  for (bool binary : {false, true}) {
    const Data d = smooth_data(300, binary, rng);
    const GamModel m = fit_gam(d.x, d.y);
    const auto& diag = m.diagnostics();
    REQUIRE(diag.grid_edf.size() == 30);
    for (std::size_t i = 1; i < diag.grid_edf.size(); ++i) {
      CHECK(diag.grid_lambda[i] > diag.grid_lambda[i - 1]);
      if (std::isfinite(diag.grid_gcv[i]) && std::isfinite(diag.grid_gcv[i - 1])) {
        CHECK(diag.grid_edf[i] <= diag.grid_edf[i - 1] + 1e-8);
      }
    }
    CHECK(diag.grid_lambda.front() == doctest::Approx(1e-6));
    CHECK(diag.grid_lambda.back() == doctest::Approx(1e6));
  }
}

TEST_CASE("selected smoothing parameter attains the grid minimum") {
  Rng rng(6);
  const Data d = smooth_data(300, false, rng);
  const GamModel m = fit_gam(d.x, d.y);
  const auto& diag = m.diagnostics();
  std::size_t best = 0;
  for (std::size_t i = 1; i < diag.grid_gcv.size(); ++i) {
    if (diag.grid_gcv[i] < diag.grid_gcv[best]) best = i;
  }
  CHECK(m.lambda(0) == diag.grid_lambda[best]);
  CHECK(diag.gcv == diag.grid_gcv[best]);
  // Refitting at fixed smoothing reproduces each grid score.
  for (std::size_t i = 0; i < diag.grid_lambda.size(); i += 7) {
    GamConfig cfg;
    cfg.lambda = diag.grid_lambda[i];
    const GamModel f = fit_gam(d.x, d.y, cfg);
    CHECK(f.diagnostics().gcv == doctest::Approx(diag.grid_gcv[i]).epsilon(1e-8));
    CHECK(f.diagnostics().edf == doctest::Approx(diag.grid_edf[i]).epsilon(1e-8));
  }
}

TEST_CASE("heavy smoothing leaves an additive linear fit") {
  Rng rng(7);
  const Data d = smooth_data(500, false, rng);
  GamConfig cfg;
  cfg.lambda = 1e12;
  const GamModel m = fit_gam(d.x, d.y, cfg);
  Eigen::MatrixXd X(d.x.rows(), 3);
  X.col(0).setOnes();
  X.col(1) = d.x.col(0);
  X.col(2) = d.x.col(1);
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(d.y);
  const Eigen::VectorXd lin = X * beta;
  const Eigen::VectorXd fit = m.predict(d.x);
  const double ss = (lin.array() - lin.mean()).square().sum();
  const double r2 = 1.0 - (fit - lin).squaredNorm() / ss;
  CHECK(r2 >= 0.999);
  CHECK(m.diagnostics().edf == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("predictions on training rows reproduce the fitted values") {
  Rng rng(8);
  for (bool binary : {false, true}) {
    const Data d = smooth_data(250, binary, rng);
    const GamModel m = fit_gam(d.x, d.y);
    const Eigen::VectorXd p = m.predict(d.x);
    CHECK((p - m.fitted()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("constant response gives a constant model") {
  Rng rng(9);
  Data d = smooth_data(100, false, rng);
  d.y.setConstant(2.5);
  const GamModel m = fit_gam(d.x, d.y);
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> x = {rng.uniform() * 3.0, rng.normal()};
    CHECK(m.predict(x) == doctest::Approx(2.5).epsilon(1e-9));
  }
}

TEST_CASE("fixed per-covariate smoothing parameters") {
  Rng rng(10);
  const Data d = smooth_data(200, false, rng);
  GamConfig cfg;
  cfg.lambdas = {1.0, 100.0};
  const GamModel m = fit_gam(d.x, d.y, cfg);
  CHECK(m.lambda(0) == 1.0);
  CHECK(m.lambda(1) == 100.0);
  CHECK(m.diagnostics().grid_lambda.empty());
  cfg.lambdas = {1.0};
  CHECK_THROWS_AS(fit_gam(d.x, d.y, cfg), ModelError);
}

TEST_CASE("gam input errors") {
  Rng rng(11);
  Data d = smooth_data(50, false, rng);
  GamConfig logit;
  logit.link = Link::kLogit;
  CHECK_THROWS_AS(fit_gam(d.x, d.y, logit), ModelError);
  GamConfig big;
  big.basis_size = 80;
  CHECK_THROWS_AS(fit_gam(d.x, d.y, big), BasisError);
  d.y[3] = std::nan("");
  CHECK_THROWS_AS(fit_gam(d.x, d.y), ModelError);
}

TEST_CASE("deviance helper") {
  Eigen::VectorXd y(2), mu(2);
  y << 1.0, 0.0;
  mu << 0.5, 0.5;
  CHECK(deviance(Link::kLogit, y, mu) == doctest::Approx(4.0 * std::log(2.0)));
  CHECK(deviance(Link::kIdentity, y, mu) == doctest::Approx(0.5));
}
