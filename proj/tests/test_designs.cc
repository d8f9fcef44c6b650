#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "massfuse/designs.h"
#include "massfuse/errors.h"
#include "massfuse/rng.h"

using namespace massfuse;

namespace {

// Every k-subset of {0, ..., n-1}, in lexicographic order.
std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  for (;;) {
    out.push_back(cur);
    std::size_t i = k;
    while (i > 0 && cur[i - 1] == n - k + i - 1) --i;
    if (i == 0) return out;
    ++cur[i - 1];
    for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
}

}  // namespace

TEST_CASE("first-order probabilities") {
  const auto srs = DesignDescriptor::srswor(3, 2);
  for (std::size_t i = 0; i < 3; ++i) CHECK(first_order_pi(srs, i) == doctest::Approx(2.0 / 3.0));
  const auto st = DesignDescriptor::stratified({{366, 37, "1"}, {20, 5, "2"}});
  CHECK(first_order_pi(st, 0) == 37.0 / 366.0);
  CHECK(first_order_pi(st, 366) == 5.0 / 20.0);
  CHECK(st.stratum_of(365) == 0);
  CHECK(st.stratum_of(366) == 1);
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.25;
  Eigen::MatrixXd pij(2, 2);
  pij << 0.5, 0.1, 0.1, 0.25;
  const auto ex = DesignDescriptor::explicit_joint(pi, pij);
  CHECK(first_order_pi(ex, 1) == 0.25);
  CHECK(joint_pi(ex, 0, 1) == 0.1);
  CHECK_THROWS_AS(first_order_pi(srs, 3), IndexError);
}

TEST_CASE("joint probabilities") {
  const auto srs = DesignDescriptor::srswor(4, 2);
  CHECK(joint_pi(srs, 0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(joint_pi(srs, 2, 2) == doctest::Approx(0.5));
  const auto st = DesignDescriptor::stratified({{10, 1, "a"}, {10, 2, "b"}});
  CHECK(joint_pi(st, 0, 15) == doctest::Approx(0.02));
}

TEST_CASE("design validation") {
  CHECK_THROWS_AS(DesignDescriptor::srswor(3, 4), DesignError);
  CHECK_THROWS_AS(DesignDescriptor::srswor(3, 0), DesignError);
  CHECK_THROWS_AS(DesignDescriptor::stratified({}), DesignError);
  CHECK_THROWS_AS(DesignDescriptor::stratified({{5, 6, "a"}}), DesignError);
  CHECK_THROWS_AS(DesignDescriptor::stratified({{5, 1, "a"}, {5, 1, "a"}}),
                  DesignError);
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.25;
  Eigen::MatrixXd asym(2, 2);
  asym << 0.5, 0.1, 0.2, 0.25;
  CHECK_THROWS_AS(DesignDescriptor::explicit_joint(pi, asym), DesignError);
  Eigen::MatrixXd bad_diag(2, 2);
  bad_diag << 0.4, 0.1, 0.1, 0.25;
  CHECK_THROWS_AS(DesignDescriptor::explicit_joint(pi, bad_diag), DesignError);
}

TEST_CASE("srswor co-selection frequency over all samples equals pi_ij") {
  const auto samples = subsets(6, 3);
  REQUIRE(samples.size() == 20);
  const auto design = DesignDescriptor::srswor(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      int count = 0;
      for (const auto& s : samples) {
        const bool hi = std::find(s.begin(), s.end(), i) != s.end();
        const bool hj = std::find(s.begin(), s.end(), j) != s.end();
        count += hi && hj;
      }
      CHECK(count / 20.0 == doctest::Approx(joint_pi(design, i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("srswor probability identities") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n_pop = 2 + rng.uniform_index(60);
    const std::size_t n = 1 + rng.uniform_index(n_pop);
    const auto d = DesignDescriptor::srswor(n_pop, n);
    double sum_pi = 0.0;
    for (std::size_t i = 0; i < n_pop; ++i) sum_pi += first_order_pi(d, i);
    CHECK(sum_pi == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
    const std::size_t i = rng.uniform_index(n_pop);
    double row = 0.0;
    for (std::size_t j = 0; j < n_pop; ++j) {
      if (j != i) row += joint_pi(d, i, j);
      CHECK(joint_pi(d, i, j) == joint_pi(d, j, i));
    }
    CHECK(row == doctest::Approx((n - 1.0) * first_order_pi(d, i)).epsilon(1e-12));
  }
}

TEST_CASE("closed-form double sum equals the explicit pair sum") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    // A stratified design and the same design written out pair by pair.
    std::vector<Stratum> strata;
    const std::size_t n_strata = 1 + rng.uniform_index(3);
    for (std::size_t h = 0; h < n_strata; ++h) {
      const std::size_t big = 2 + rng.uniform_index(8);
      strata.push_back({big, 2 + rng.uniform_index(big - 1), std::to_string(h)});
    }
    const auto closed = DesignDescriptor::stratified(strata);
    const std::size_t n_pop = closed.population_size();
    Eigen::VectorXd pi(n_pop);
    Eigen::MatrixXd pij(n_pop, n_pop);
    for (std::size_t i = 0; i < n_pop; ++i) {
      pi[i] = first_order_pi(closed, i);
      for (std::size_t j = 0; j < n_pop; ++j) pij(i, j) = joint_pi(closed, i, j);
    }
    const auto expl = DesignDescriptor::explicit_joint(pi, pij);
    // A sample: the first n_h units of every stratum.
    std::vector<std::size_t> units;
    std::vector<double> values;
    std::size_t offset = 0;
    for (const auto& s : strata) {
      for (std::size_t k = 0; k < s.sample_size; ++k) {
        units.push_back(offset + k);
        values.push_back(rng.normal() * 3.0 + 1.0);
      }
      offset += s.population_size;
    }
    for (auto w : {PairWeighting::kJointProbability,
                   PairWeighting::kProductOfMarginals}) {
      const double a = design_double_sum(closed, units, values, w);
      const double b = design_double_sum(expl, units, values, w);
      CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
  }
}

TEST_CASE("ht variance estimator is exactly unbiased under srswor(6, 3)") {
  const std::vector<double> y = {1, 2, 3, 4, 5, 6};
  const auto design = DesignDescriptor::srswor(6, 3);
  double mean_est = 0.0, mean_var = 0.0, second = 0.0;
  const auto samples = subsets(6, 3);
  for (const auto& s : samples) {
    std::vector<double> v;
    double est = 0.0;
    for (std::size_t i : s) {
      v.push_back(y[i]);
      est += y[i] / first_order_pi(design, i) / 6.0;
    }
    mean_est += est / 20.0;
    second += est * est / 20.0;
    mean_var += design_double_sum(design, s, v) / 36.0 / 20.0;
  }
  CHECK(mean_est == doctest::Approx(3.5).epsilon(1e-15));
  const double true_var = second - 3.5 * 3.5;
  // (1 - n/N) S^2 / n with S^2 = 3.5.
  CHECK(true_var == doctest::Approx(0.5 * 3.5 / 3.0).epsilon(1e-13));
  CHECK(std::abs(mean_var - true_var) < 1e-12);
}

TEST_CASE("variance undefined for a single sampled unit") {
  const auto design = DesignDescriptor::stratified({{5, 1, "a"}, {5, 2, "b"}});
  const std::vector<std::size_t> units = {0, 5, 6};
  const std::vector<double> values = {1, 2, 3};
  CHECK_THROWS_AS(design_double_sum(design, units, values), VarianceUndefinedError);
  const auto census = DesignDescriptor::srswor(3, 3);
  const std::vector<std::size_t> all = {0, 1, 2};
  CHECK(design_double_sum(census, all, values) == 0.0);
}
