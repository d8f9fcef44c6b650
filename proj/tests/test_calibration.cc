#include <cmath>
#include <vector>

#include "doctest.h"
#include "massfuse/calibration.h"
#include "massfuse/errors.h"
#include "oracles.h"
#include "test_support.h"

using namespace massfuse;

using Instance = oracles::CalibrationInstance;
using oracles::qp_oracle;

namespace {

Instance random_instance(Rng& rng, std::size_t n, std::size_t r) {
  return oracles::random_calibration_instance(rng, n, r);
}

}  // namespace

TEST_CASE("calibrated weights match the quadratic-programming oracle") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.uniform_index(5);
    const std::size_t n = r + 2 + rng.uniform_index(49 - r);
    const Instance in = random_instance(rng, n, r);
    const auto res = calibrate_weights(in.d, in.h, in.totals);
    CHECK(res.max_relative_violation <= 1e-8);
    const Eigen::VectorXd oracle = qp_oracle(in);
    const double obj = chi_square_distance(in.d, res.omega);
    const double ref = chi_square_distance(in.d, oracle);
    CHECK(std::abs(obj - ref) <= 1e-8 * std::max(1.0, ref));
    CHECK(res.distance == doctest::Approx(obj));
    // Idempotence.
    const auto again = calibrate_weights(res.omega, in.h, in.totals);
    CHECK((again.omega - res.omega).cwiseAbs().maxCoeff() <=
          1e-10 * res.omega.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("no feasible perturbation has a smaller distance") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const std::size_t r = 1 + rng.uniform_index(4);
    const std::size_t n = r + 2 + rng.uniform_index(18 - r);
    const Instance in = random_instance(rng, n, r);
    const auto res = calibrate_weights(in.d, in.h, in.totals);
    // Directions in the null space of h' keep every constraint.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(in.h.transpose());
    const Eigen::MatrixXd null = lu.kernel();
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd c(null.cols());
      for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = rng.normal();
      const Eigen::VectorXd other = res.omega + null * c;
      CHECK(res.distance <= chi_square_distance(in.d, other) + 1e-8);
    }
  }
}

TEST_CASE("constraints already met leave the weights unchanged") {
  Rng rng(3);
  Instance in = random_instance(rng, 20, 3);
  in.totals = in.h.transpose() * in.d;
  const auto res = calibrate_weights(in.d, in.h, in.totals);
  CHECK((res.omega - in.d).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.lagrange.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("hand-solved scalar calibration") {
  Eigen::VectorXd d(2), totals(1);
  d << 1.0, 1.0;
  Eigen::MatrixXd h(2, 1);
  h << 1.0, 1.0;
  totals << 3.0;
  const auto res = calibrate_weights(d, h, totals);
  CHECK(res.lagrange[0] == doctest::Approx(0.5));
  CHECK(res.omega[0] == doctest::Approx(1.5));
  CHECK(res.omega[1] == doctest::Approx(1.5));
}

TEST_CASE("collinear constraints name the offending component") {
  Rng rng(4);
  Instance in = random_instance(rng, 20, 3);
  in.h.col(2) = in.h.col(1);
  const std::vector<std::string> names = {"one", "a", "b"};
  try {
    calibrate_weights(in.d, in.h, in.totals, names);
    FAIL("expected CollinearConstraintError");
  } catch (const CollinearConstraintError& e) {
    CHECK((e.component() == "a" || e.component() == "b"));
  }
  Instance zero = random_instance(rng, 10, 2);
  zero.h.col(1).setZero();
  CHECK_THROWS_AS(calibrate_weights(zero.d, zero.h, zero.totals),
                  CollinearConstraintError);
  zero.totals[1] = 0.0;
  const auto res = calibrate_weights(zero.d, zero.h, zero.totals);
  REQUIRE(res.vacuous_components.size() == 1);
  CHECK(res.vacuous_components[0] == 1);
}

TEST_CASE("negative weights are reported, not truncated") {
  Eigen::VectorXd d(3), totals(2);
  d << 1.0, 1.0, 1.0;
  Eigen::MatrixXd h(3, 2);
  h << 1, 0, 1, 1, 1, 2;
  totals << 3.0, 8.0;
  const auto res = calibrate_weights(d, h, totals);
  CHECK(res.negative_weights >= 1);
  CHECK(res.max_relative_violation < 1e-12);
}

TEST_CASE("benchmark totals") {
  Rng rng(5);
  Frame pop = testing::random_population(5, 2, rng);
  const auto spec = default_calibration_spec(2, 0);
  const BigSample census = make_big_sample(pop);
  const Eigen::VectorXd t = compute_benchmark(census, 5, spec);
  double ysum = 0.0, x1 = 0.0;
  for (const auto& r : pop.records()) {
    ysum += r.y[0];
    x1 += r.x[0];
  }
  CHECK(t[0] == 5.0);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == doctest::Approx(x1));
  CHECK(t[4] == doctest::Approx(ysum));
  const Frame big = testing::random_population(30, 2, rng);
  const Eigen::VectorXd t2 = compute_benchmark(make_big_sample(big), 100, spec);
  CHECK(t2[0] == 30.0);
  CHECK(t2[1] == 70.0);
}

TEST_CASE("benchmark equals the enumerated population sum") {
  Rng rng(6);
  const Frame pop = testing::random_population(2000, 2, rng);
  const auto b = draw_sample_b(pop, LogisticLinear{{0.0, 0.0, 1.0}}, rng);
  const auto spec = default_calibration_spec(2, 0);
  const Eigen::VectorXd t = compute_benchmark(b.sample, pop.n_rows(), spec);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(5);
  for (const auto& r : b.population.records()) {
    direct += spec.h_map(r.delta_b, r.x, r.delta_b ? r.y[0] : 0.0);
  }
  CHECK((t - direct).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("beta hat special cases") {
  Rng rng(7);
  const Frame pop = testing::random_population(40, 1, rng);
  const auto b = draw_sample_b(pop, LogisticLinear{{0.0, 1.0}}, rng);
  CalibrationSpec spec;
  spec.components = {"delta_b"};
  spec.n_covariates = 1;
  spec.h_map = [](bool delta, std::span<const double>, double) {
    Eigen::VectorXd h(1);
    h[0] = delta ? 1.0 : 0.0;
    return h;
  };
  const Eigen::MatrixXd hb = calibration_design(b.sample, spec);
  std::vector<double> gb;
  double mean = 0.0;
  for (const auto& r : b.sample.frame.records()) {
    gb.push_back(r.y[0]);
    mean += r.y[0] / static_cast<double>(b.sample.size());
  }
  const Eigen::MatrixXd ha(0, 1);
  const std::vector<bool> delta;
  const std::vector<double> none;
  const Eigen::VectorXd beta = beta_hat(hb, gb, ha, delta, none, none, 40, spec);
  CHECK(beta[0] == doctest::Approx(mean));
  const std::vector<double> zeros(gb.size(), 0.0);
  CHECK(beta_hat(hb, zeros, ha, delta, none, none, 40, spec).norm() == 0.0);
}

TEST_CASE("beta hat matches a dense population solve") {
  Rng rng(8);
  const Frame pop = testing::random_population(50, 2, rng);
  const auto b = draw_sample_b(pop, LogisticLinear{{0.0, 0.0, 1.0}}, rng);
  const auto a = draw_sample_a(b.population, DesignDescriptor::srswor(50, 15), rng);
  const auto spec = default_calibration_spec(2, 0);
  // Imputed y for A and g* for its off-B units.
  std::vector<double> y_imp(a.n()), g_a(a.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    y_imp[i] = rng.normal();
    g_a[i] = rng.normal() + 2.0;
  }
  const Eigen::MatrixXd ha = calibration_design(a, y_imp, spec);
  const Eigen::MatrixXd hb = calibration_design(b.sample, spec);
  std::vector<double> gb;
  for (const auto& r : b.sample.frame.records()) gb.push_back(r.y[0] * 0.5 + 1.0);
  std::vector<bool> delta(a.n());
  for (std::size_t i = 0; i < a.n(); ++i) delta[i] = a.frame[i].delta_b;
  const auto d = a.design_weights();
  const Eigen::VectorXd beta = beta_hat(hb, gb, ha, delta, d, g_a, 50, spec);

  Eigen::MatrixXd hu(50, 5);
  std::size_t kb = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& r = b.population[i];
    hu.row(static_cast<Eigen::Index>(i)) =
        spec.h_map(r.delta_b, r.x, r.delta_b ? r.y[0] : 0.0).transpose();
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5);
  for (std::size_t i = 0; i < 50; ++i) {
    if (!b.population[i].delta_b) continue;
    rhs += hu.row(static_cast<Eigen::Index>(i)).transpose() * gb[kb++];
  }
  for (std::size_t i = 0; i < a.n(); ++i) {
    if (!delta[i]) rhs += d[i] * g_a[i] * ha.row(static_cast<Eigen::Index>(i)).transpose();
  }
  const Eigen::VectorXd ref = (hu.transpose() * hu).fullPivLu().solve(rhs);
  CHECK((beta - ref).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("calibration map must be constant off the big-data sample") {
  Rng rng(9);
  const Frame pop = testing::random_population(30, 1, rng);
  const auto b = draw_sample_b(pop, LogisticLinear{{-1.0, 0.0}}, rng);
  const auto a = draw_sample_a(b.population, DesignDescriptor::srswor(30, 10), rng);
  CalibrationSpec bad;
  bad.n_covariates = 1;
  bad.components = {"x"};
  bad.h_map = [](bool, std::span<const double> x, double) {
    Eigen::VectorXd h(1);
    h[0] = x.empty() ? 0.0 : x[0];
    return h;
  };
  const std::vector<double> y(a.n(), 0.0);
  bool any_off_b = false;
  for (const auto& r : a.frame.records()) any_off_b |= !r.delta_b;
  if (any_off_b) CHECK_THROWS_AS(calibration_design(a, y, bad), ModelError);
}
