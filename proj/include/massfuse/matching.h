// Exact k-nearest-neighbour donor search from the big-data sample.
//
// Matching is with replacement under unstandardized Euclidean distance.
// Candidates are ordered by (squared distance, donor row), so equal distances
// resolve to the lowest donor row in both the tree and the exhaustive scan.

#ifndef MASSFUSE_MATCHING_H_
#define MASSFUSE_MATCHING_H_

#include <cstddef>
#include <span>
#include <vector>

#include "massfuse/frame.h"
#include "massfuse/sample.h"

namespace massfuse {

struct MatchResult {
  std::size_t k = 0;
  std::size_t n_queries = 0;
  // Row-major n_queries x k, nearest first.
  std::vector<std::size_t> donor_indices;
  std::vector<double> distances;

  std::span<const std::size_t> donors(std::size_t query) const {
    return {donor_indices.data() + query * k, k};
  }
  std::span<const double> donor_distances(std::size_t query) const {
    return {distances.data() + query * k, k};
  }
};

// Static k-d tree over the donor covariates. Immutable after construction;
// concurrent queries are safe.
class KdTree {
 public:
  explicit KdTree(const RowMatrix& points, std::size_t leaf_size = 16);

  std::size_t size() const { return index_.size(); }
  std::size_t dimension() const { return dim_; }

  // Writes the k nearest (squared distance, row) pairs in ascending order.
  void query(std::span<const double> point, std::size_t k,
             std::span<std::size_t> rows, std::span<double> sq_dist) const;

 private:
  struct Node {
    // Leaf when left < 0: covers index_[begin, end).
    int left = -1;
    int right = -1;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t split_dim = 0;
    double split_value = 0.0;
  };

  int build(std::size_t begin, std::size_t end);

  std::size_t dim_ = 0;
  std::size_t leaf_size_ = 16;
  // Points in tree order, row-major, with their original rows in index_.
  std::vector<double> coords_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
};

struct MatchOptions {
  // Divide every column by the donor pool's standard deviation first.
  bool standardize = false;
};

// Throws DonorPoolError when k is outside [1, N_B] and DimensionError when
// the covariate counts differ. Dimensions above 20 use the exhaustive scan.
MatchResult match_knn(const RowMatrix& a_covariates,
                      const RowMatrix& b_covariates, std::size_t k,
                      const MatchOptions& options = {});
MatchResult match_knn_bruteforce(const RowMatrix& a_covariates,
                                 const RowMatrix& b_covariates, std::size_t k,
                                 const MatchOptions& options = {});

// Per-A-unit mean of g over its k donors.
std::vector<double> impute_values(const MatchResult& match,
                                  const BigSample& b_sample,
                                  const GFunction& g);
// Same, from g already evaluated on every donor row.
std::vector<double> impute_values(const MatchResult& match,
                                  std::span<const double> donor_values);

}  // namespace massfuse

#endif  // MASSFUSE_MATCHING_H_
