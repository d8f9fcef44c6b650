#include "massfuse/matching.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

constexpr std::size_t kMaxTreeDimension = 20;

void check_inputs(const RowMatrix& a, const RowMatrix& b, std::size_t k) {
  if (b.rows() == 0) throw DonorPoolError("donor pool is empty");
  if (k == 0 || k > static_cast<std::size_t>(b.rows())) {
    throw DonorPoolError("k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(b.rows()) + "]");
  }
  if (a.cols() != b.cols()) {
    throw DimensionError("query covariates have " + std::to_string(a.cols()) +
                         " columns but donors have " +
                         std::to_string(b.cols()));
  }
}

// Scales columns of both matrices by the donor-pool standard deviation.
// Constant columns are left as they are.
void standardize(RowMatrix& a, RowMatrix& b) {
  const double n = static_cast<double>(b.rows());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double mean = b.col(j).mean();
    const double ss = (b.col(j).array() - mean).square().sum();
    const double sd = b.rows() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (sd > 0.0) {
      a.col(j) /= sd;
      b.col(j) /= sd;
    }
  }
}

MatchResult empty_result(std::size_t n_queries, std::size_t k) {
  MatchResult r;
  r.k = k;
  r.n_queries = n_queries;
  r.donor_indices.resize(n_queries * k);
  r.distances.resize(n_queries * k);
  return r;
}

void finish_distances(MatchResult& r) {
  for (double& d : r.distances) d = std::sqrt(d);
}

MatchResult bruteforce(const RowMatrix& a, const RowMatrix& b, std::size_t k) {
  const std::size_t nb = static_cast<std::size_t>(b.rows());
  const std::size_t p = static_cast<std::size_t>(b.cols());
  MatchResult r = empty_result(static_cast<std::size_t>(a.rows()), k);
  std::vector<std::pair<double, std::size_t>> all(nb);
  for (std::size_t q = 0; q < r.n_queries; ++q) {
    const double* x = a.data() + q * p;
    for (std::size_t i = 0; i < nb; ++i) {
      const double* c = b.data() + i * p;
      double d2 = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double diff = x[j] - c[j];
        d2 += diff * diff;
      }
      all[i] = {d2, i};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                      all.end());
    for (std::size_t m = 0; m < k; ++m) {
      r.distances[q * k + m] = all[m].first;
      r.donor_indices[q * k + m] = all[m].second;
    }
  }
  finish_distances(r);
  return r;
}

}  // namespace

MatchResult match_knn(const RowMatrix& a_covariates,
                      const RowMatrix& b_covariates, std::size_t k,
                      const MatchOptions& options) {
  check_inputs(a_covariates, b_covariates, k);
  RowMatrix a = a_covariates;
  RowMatrix b = b_covariates;
  if (options.standardize) standardize(a, b);
  if (static_cast<std::size_t>(b.cols()) > kMaxTreeDimension) {
    return bruteforce(a, b, k);
  }
  const KdTree tree(b);
  const std::size_t p = static_cast<std::size_t>(a.cols());
  MatchResult r = empty_result(static_cast<std::size_t>(a.rows()), k);
  for (std::size_t q = 0; q < r.n_queries; ++q) {
    tree.query({a.data() + q * p, p}, k, {r.donor_indices.data() + q * k, k},
               {r.distances.data() + q * k, k});
  }
  finish_distances(r);
  return r;
}

MatchResult match_knn_bruteforce(const RowMatrix& a_covariates,
                                 const RowMatrix& b_covariates, std::size_t k,
                                 const MatchOptions& options) {
  check_inputs(a_covariates, b_covariates, k);
  RowMatrix a = a_covariates;
  RowMatrix b = b_covariates;
  if (options.standardize) standardize(a, b);
  return bruteforce(a, b, k);
}

std::vector<double> impute_values(const MatchResult& match,
                                  std::span<const double> donor_values) {
  std::vector<double> out(match.n_queries);
  for (std::size_t q = 0; q < match.n_queries; ++q) {
    double s = 0.0;
    for (std::size_t row : match.donors(q)) {
      if (row >= donor_values.size()) {
        throw IndexError("donor row " + std::to_string(row) +
                         " has no value");
      }
      s += donor_values[row];
    }
    out[q] = s / static_cast<double>(match.k);
  }
  return out;
}

std::vector<double> impute_values(const MatchResult& match,
                                  const BigSample& b_sample,
                                  const GFunction& g) {
  const Eigen::VectorXd v = apply_g(g, b_sample.frame);
  return impute_values(match, std::span<const double>(v.data(),
                                                      static_cast<std::size_t>(v.size())));
}

}  // namespace massfuse
