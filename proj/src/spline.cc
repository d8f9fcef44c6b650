#include "massfuse/spline.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

SplineBasis SplineBasis::build(std::span<const double> x, std::size_t size,
                               int degree) {
  if (degree < 1) throw BasisError("spline degree must be at least 1");
  if (size <= static_cast<std::size_t>(degree) + 1) {
    throw BasisError("basis size " + std::to_string(size) +
                     " must exceed degree + 1");
  }
  std::vector<double> v(x.begin(), x.end());
  for (double e : v) {
    if (!std::isfinite(e)) throw BasisError("covariate has non-finite values");
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.size() < size) {
    throw BasisError("covariate has " + std::to_string(v.size()) +
                     " distinct values; basis of size " +
                     std::to_string(size) + " needs at least that many");
  }
  const std::size_t n_interior = size - degree - 1;
  std::vector<double> interior(n_interior);
  const double last = static_cast<double>(v.size() - 1);
  for (std::size_t j = 0; j < n_interior; ++j) {
    const double pos = last * static_cast<double>(j + 1) /
                       static_cast<double>(n_interior + 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    interior[j] = lo + 1 < v.size() ? v[lo] + frac * (v[lo + 1] - v[lo]) : v[lo];
  }
  return SplineBasis(std::move(interior), {v.front(), v.back()}, degree);
}

SplineBasis::SplineBasis(std::vector<double> interior_knots,
                         std::pair<double, double> boundary_knots, int degree)
    : degree_(degree),
      interior_(std::move(interior_knots)),
      boundary_(boundary_knots) {
  if (degree_ < 1) throw BasisError("spline degree must be at least 1");
  if (!(boundary_.first < boundary_.second)) {
    throw BasisError("boundary knots must satisfy lo < hi");
  }
  double prev = boundary_.first;
  for (double k : interior_) {
    if (!(k > prev)) throw BasisError("knots must be strictly increasing");
    prev = k;
  }
  if (!(boundary_.second > prev)) {
    throw BasisError("interior knots must lie inside the boundary");
  }
  knots_.assign(degree_ + 1, boundary_.first);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, boundary_.second);
}

std::size_t SplineBasis::find_span(double x) const {
  const std::size_t n = size() - 1;
  if (x >= knots_[n + 1]) return n;
  if (x <= knots_[degree_]) return static_cast<std::size_t>(degree_);
  // Last i in [degree, n] with knots_[i] <= x.
  const auto it = std::upper_bound(knots_.begin() + degree_,
                                   knots_.begin() + n + 1, x);
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

std::size_t SplineBasis::evaluate_nonzero(double x, std::span<double> out,
                                          int derivative) const {
  const int p = degree_;
  if (out.size() < static_cast<std::size_t>(p) + 1) {
    throw DimensionError("output span shorter than degree + 1");
  }
  x = std::clamp(x, boundary_.first, boundary_.second);
  const std::size_t span = find_span(x);
  const std::size_t first = span - p;
  if (derivative > p) {
    std::fill(out.begin(), out.begin() + p + 1, 0.0);
    return first;
  }

  // Piegl & Tiller, algorithm A2.3.
  const auto& U = knots_;
  std::vector<double> ndu((p + 1) * (p + 1));
  auto N = [&](int r, int c) -> double& { return ndu[r * (p + 1) + c]; };
  std::vector<double> left(p + 1), right(p + 1);
  N(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[span + 1 - j];
    right[j] = U[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      N(j, r) = right[r + 1] + left[j - r];
      const double temp = N(r, j - 1) / N(j, r);
      N(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N(j, j) = saved;
  }
  if (derivative == 0) {
    for (int j = 0; j <= p; ++j) out[j] = N(j, p);
    return first;
  }

  const int nd = derivative;
  std::vector<double> a(2 * (p + 1));
  auto A = [&](int s, int c) -> double& { return a[s * (p + 1) + c]; };
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    double d = 0.0;
    for (int k = 1; k <= nd; ++k) {
      d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        A(s2, 0) = A(s1, 0) / N(pk + 1, rk);
        d = A(s2, 0) * N(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / N(pk + 1, rk + j);
        d += A(s2, j) * N(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, k) = -A(s1, k - 1) / N(pk + 1, r);
        d += A(s2, k) * N(r, pk);
      }
      std::swap(s1, s2);
    }
    out[r] = d;
  }
  double factor = p;
  for (int k = 1; k < nd; ++k) factor *= p - k;
  for (int j = 0; j <= p; ++j) out[j] *= factor;
  return first;
}

Eigen::VectorXd SplineBasis::evaluate(double x, int derivative) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  std::vector<double> buf(degree_ + 1);
  const std::size_t first = evaluate_nonzero(x, buf, derivative);
  for (int j = 0; j <= degree_; ++j) {
    v[static_cast<Eigen::Index>(first + j)] = buf[j];
  }
  return v;
}

Eigen::MatrixXd penalty_matrix(const SplineBasis& basis) {
  const int p = basis.degree();
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  if (p < 2) return S;
  std::vector<double> nodes, weights;
  gauss_legendre(std::max(2, p), nodes, weights);
  std::vector<double> d2(p + 1);

  std::vector<double> breaks;
  breaks.push_back(basis.boundary_knots().first);
  breaks.insert(breaks.end(), basis.interior_knots().begin(),
                basis.interior_knots().end());
  breaks.push_back(basis.boundary_knots().second);
  for (std::size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
    const double a = breaks[iv], b = breaks[iv + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double x = mid + half * nodes[q];
      const double w = half * weights[q];
      const auto first =
          static_cast<Eigen::Index>(basis.evaluate_nonzero(x, d2, 2));
      for (int r = 0; r <= p; ++r) {
        for (int c = 0; c <= p; ++c) {
          S(first + r, first + c) += w * d2[r] * d2[c];
        }
      }
    }
  }
  return 0.5 * (S + S.transpose());
}

}  // namespace massfuse
