#include <algorithm>

#include "massfuse/errors.h"
#include "massfuse/matching.h"

namespace massfuse {

namespace {

// Keeps the k smallest (d2, row) pairs in ascending lexicographic order.
class CandidateList {
 public:
  CandidateList(std::span<std::size_t> rows, std::span<double> d2)
      : rows_(rows), d2_(d2) {}

  bool full() const { return count_ == rows_.size(); }
  double worst() const { return d2_[count_ - 1]; }

  void offer(double d2, std::size_t row) {
    if (full()) {
      const double wd = d2_[count_ - 1];
      if (d2 > wd || (d2 == wd && row >= rows_[count_ - 1])) return;
    } else {
      ++count_;
    }
    std::size_t pos = count_ - 1;
    while (pos > 0 && (d2 < d2_[pos - 1] ||
                       (d2 == d2_[pos - 1] && row < rows_[pos - 1]))) {
      d2_[pos] = d2_[pos - 1];
      rows_[pos] = rows_[pos - 1];
      --pos;
    }
    d2_[pos] = d2;
    rows_[pos] = row;
  }

 private:
  std::span<std::size_t> rows_;
  std::span<double> d2_;
  std::size_t count_ = 0;
};

}  // namespace

KdTree::KdTree(const RowMatrix& points, std::size_t leaf_size)
    : dim_(static_cast<std::size_t>(points.cols())),
      leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  index_.resize(n);
  for (std::size_t i = 0; i < n; ++i) index_[i] = i;
  // Building sorts index_ against the caller's matrix; coords_ is filled
  // afterwards in tree order.
  coords_.assign(points.data(), points.data() + n * dim_);
  if (n > 0) build(0, n);
  std::vector<double> ordered(n * dim_);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(points.data() + index_[i] * dim_, dim_,
                ordered.data() + i * dim_);
  }
  coords_ = std::move(ordered);
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, -1, begin, end, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  std::size_t best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = coords_[index_[begin] * dim_ + d], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = coords_[index_[i] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (best_spread <= 0.0) return id;

  const std::size_t mid = begin + (end - begin) / 2;
  const auto first = index_.begin() + static_cast<std::ptrdiff_t>(begin);
  std::nth_element(first, index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = coords_[a * dim_ + best_dim];
                     const double vb = coords_[b * dim_ + best_dim];
                     return va < vb || (va == vb && a < b);
                   });
  // Left holds coordinates <= split, right holds coordinates >= split.
  const double split = coords_[index_[mid] * dim_ + best_dim];
  nodes_[id].split_dim = best_dim;
  nodes_[id].split_value = split;
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::query(std::span<const double> point, std::size_t k,
                   std::span<std::size_t> rows, std::span<double> sq_dist) const {
  if (point.size() != dim_) throw DimensionError("query dimension mismatch");
  if (k == 0 || k > size()) throw DonorPoolError("k outside [1, N_B]");
  CandidateList best(rows.first(k), sq_dist.first(k));

  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const double* c = coords_.data() + i * dim_;
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          const double diff = point[j] - c[j];
          d2 += diff * diff;
        }
        best.offer(d2, index_[i]);
      }
      return;
    }
    const double diff = point[node.split_dim] - node.split_value;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    // Equality must still be explored: the far side may hold a tie with a
    // lower row.
    if (!best.full() || diff * diff <= best.worst()) self(self, far);
  };
  visit(visit, 0);
}

}  // namespace massfuse
