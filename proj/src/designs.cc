#include "massfuse/designs.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

double pair_coefficient(double pij, double pi, double pj,
                        PairWeighting weighting) {
  const double denom =
      weighting == PairWeighting::kJointProbability ? pij : pi * pj;
  return (pij - pi * pj) / denom;
}

// Double sum over one block of exchangeable units (simple random sampling of
// `n` from `N`), where the diagonal coefficient is c_d and every off-diagonal
// coefficient is c_o. Uses sum a_i^2 = sum (a_i - mean)^2 + n mean^2 to keep
// the cancellation in the (c_d - c_o) term out of the centered sum.
struct BlockSum {
  std::size_t count = 0;
  double mean = 0.0;
  double centered = 0.0;

  void add(double a) {
    ++count;
    const double delta = a - mean;
    mean += delta / static_cast<double>(count);
    centered += delta * (a - mean);
  }
};

double block_double_sum(const BlockSum& s, std::size_t N, std::size_t n,
                        PairWeighting weighting) {
  if (s.count == 0) return 0.0;
  if (n < 2) {
    throw VarianceUndefinedError(
        "design variance needs at least two sampled units per stratum");
  }
  const double pi = static_cast<double>(n) / static_cast<double>(N);
  const double pij = (static_cast<double>(n) * static_cast<double>(n - 1)) /
                     (static_cast<double>(N) * static_cast<double>(N - 1));
  const double c_d = pair_coefficient(pi, pi, pi, weighting);
  const double c_o = pair_coefficient(pij, pi, pi, weighting);
  const double m = static_cast<double>(s.count);
  // sum_ij c_ij a_i a_j = (c_d - c_o) sum a^2 + c_o (sum a)^2
  return (c_d - c_o) * s.centered +
         ((c_d - c_o) * m + c_o * m * m) * s.mean * s.mean;
}

void check_unit(const DesignDescriptor& design, std::size_t unit) {
  if (unit >= design.population_size()) {
    throw IndexError("unit " + std::to_string(unit) +
                     " outside population of size " +
                     std::to_string(design.population_size()));
  }
}

}  // namespace

DesignDescriptor DesignDescriptor::srswor(std::size_t population_size,
                                          std::size_t sample_size) {
  if (sample_size == 0 || sample_size > population_size) {
    throw DesignError("SRSWOR needs 0 < n <= N (n=" +
                      std::to_string(sample_size) +
                      ", N=" + std::to_string(population_size) + ")");
  }
  return DesignDescriptor(Srswor{population_size, sample_size});
}

DesignDescriptor DesignDescriptor::stratified(std::vector<Stratum> strata) {
  if (strata.empty()) throw DesignError("stratified design without strata");
  std::set<std::string> labels;
  StratifiedSrswor s;
  s.offsets.push_back(0);
  for (const auto& h : strata) {
    if (h.sample_size == 0 || h.sample_size > h.population_size) {
      throw DesignError("stratum '" + h.label + "' needs 0 < n_h <= N_h (n_h=" +
                        std::to_string(h.sample_size) +
                        ", N_h=" + std::to_string(h.population_size) + ")");
    }
    if (!labels.insert(h.label).second) {
      throw DesignError("duplicate stratum label '" + h.label + "'");
    }
    s.offsets.push_back(s.offsets.back() + h.population_size);
  }
  s.strata = std::move(strata);
  return DesignDescriptor(std::move(s));
}

DesignDescriptor DesignDescriptor::explicit_joint(Eigen::VectorXd pi,
                                                  Eigen::MatrixXd pi_joint) {
  const Eigen::Index N = pi.size();
  if (N == 0 || pi_joint.rows() != N || pi_joint.cols() != N) {
    throw DesignError("explicit design needs an N-vector and N x N matrix");
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    if (pi_joint(i, i) != pi[i]) {
      throw DesignError("joint-probability diagonal must equal pi");
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      const double v = pi_joint(i, j);
      if (!(v > 0.0 && v <= 1.0)) {
        throw DesignError("joint inclusion probabilities must lie in (0, 1]");
      }
      if (v != pi_joint(j, i)) {
        throw DesignError("joint-probability matrix must be symmetric");
      }
    }
  }
  return DesignDescriptor(ExplicitJoint{std::move(pi), std::move(pi_joint)});
}

std::size_t DesignDescriptor::population_size() const {
  return std::visit(
      [](const auto& d) -> std::size_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Srswor>) {
          return d.population_size;
        } else if constexpr (std::is_same_v<T, StratifiedSrswor>) {
          return d.offsets.back();
        } else {
          return static_cast<std::size_t>(d.pi.size());
        }
      },
      variant_);
}

std::size_t DesignDescriptor::sample_size() const {
  return std::visit(
      [](const auto& d) -> std::size_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Srswor>) {
          return d.sample_size;
        } else if constexpr (std::is_same_v<T, StratifiedSrswor>) {
          std::size_t n = 0;
          for (const auto& h : d.strata) n += h.sample_size;
          return n;
        } else {
          return static_cast<std::size_t>(std::llround(d.pi.sum()));
        }
      },
      variant_);
}

std::size_t DesignDescriptor::stratum_of(std::size_t unit) const {
  const auto* s = std::get_if<StratifiedSrswor>(&variant_);
  if (s == nullptr) return 0;
  const auto it = std::upper_bound(s->offsets.begin(), s->offsets.end(), unit);
  return static_cast<std::size_t>(it - s->offsets.begin()) - 1;
}

double first_order_pi(const DesignDescriptor& design, std::size_t unit) {
  check_unit(design, unit);
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Srswor>) {
          return static_cast<double>(d.sample_size) /
                 static_cast<double>(d.population_size);
        } else if constexpr (std::is_same_v<T, StratifiedSrswor>) {
          const auto& h = d.strata[design.stratum_of(unit)];
          return static_cast<double>(h.sample_size) /
                 static_cast<double>(h.population_size);
        } else {
          return d.pi[static_cast<Eigen::Index>(unit)];
        }
      },
      design.variant());
}

double joint_pi(const DesignDescriptor& design, std::size_t i, std::size_t j) {
  check_unit(design, i);
  check_unit(design, j);
  if (i == j) return first_order_pi(design, i);
  auto srs_joint = [](std::size_t N, std::size_t n) {
    return (static_cast<double>(n) * static_cast<double>(n - 1)) /
           (static_cast<double>(N) * static_cast<double>(N - 1));
  };
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Srswor>) {
          return srs_joint(d.population_size, d.sample_size);
        } else if constexpr (std::is_same_v<T, StratifiedSrswor>) {
          const std::size_t hi = design.stratum_of(i);
          const std::size_t hj = design.stratum_of(j);
          if (hi != hj) {
            return first_order_pi(design, i) * first_order_pi(design, j);
          }
          return srs_joint(d.strata[hi].population_size,
                           d.strata[hi].sample_size);
        } else {
          return d.pi_joint(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j));
        }
      },
      design.variant());
}

double design_double_sum(const DesignDescriptor& design,
                         std::span<const std::size_t> units,
                         std::span<const double> values,
                         PairWeighting weighting) {
  if (units.size() != values.size()) {
    throw DimensionError("design_double_sum: units and values differ in length");
  }
  for (std::size_t u : units) check_unit(design, u);
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Srswor>) {
          BlockSum s;
          const double pi = static_cast<double>(d.sample_size) /
                            static_cast<double>(d.population_size);
          for (double v : values) s.add(v / pi);
          if (d.sample_size == d.population_size) return 0.0;
          return block_double_sum(s, d.population_size, d.sample_size,
                                  weighting);
        } else if constexpr (std::is_same_v<T, StratifiedSrswor>) {
          std::vector<BlockSum> blocks(d.strata.size());
          for (std::size_t i = 0; i < units.size(); ++i) {
            const std::size_t h = design.stratum_of(units[i]);
            const double pi = static_cast<double>(d.strata[h].sample_size) /
                              static_cast<double>(d.strata[h].population_size);
            blocks[h].add(values[i] / pi);
          }
          double total = 0.0;
          for (std::size_t h = 0; h < blocks.size(); ++h) {
            const auto& st = d.strata[h];
            // With n_h = N_h the stratum is a census; when n_h = 1 the
            // within-stratum variance has no estimator.
            if (st.sample_size == 1 && blocks[h].count > 0) {
              throw VarianceUndefinedError("stratum '" + st.label +
                                           "' has a single sampled unit");
            }
            if (st.sample_size == st.population_size) continue;
            total += block_double_sum(blocks[h], st.population_size,
                                      st.sample_size, weighting);
          }
          return total;
        } else {
          double total = 0.0;
          for (std::size_t a = 0; a < units.size(); ++a) {
            const auto i = static_cast<Eigen::Index>(units[a]);
            const double ai = values[a] / d.pi[i];
            for (std::size_t b = 0; b < units.size(); ++b) {
              const auto j = static_cast<Eigen::Index>(units[b]);
              const double c =
                  pair_coefficient(d.pi_joint(i, j), d.pi[i], d.pi[j], weighting);
              total += c * ai * values[b] / d.pi[j];
            }
          }
          return total;
        }
      },
      design.variant());
}

}  // namespace massfuse
