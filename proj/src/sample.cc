#include "massfuse/sample.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "massfuse/errors.h"

namespace massfuse {

std::vector<double> ProbabilitySample::design_weights() const {
  std::vector<double> d(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) d[i] = 1.0 / pi[i];
  return d;
}

ProbabilitySample make_probability_sample(
    Frame frame, DesignDescriptor design, std::vector<std::size_t> units,
    std::optional<std::vector<double>> pi) {
  if (units.size() != frame.n_rows()) {
    throw DesignError("sample has " + std::to_string(frame.n_rows()) +
                      " rows but " + std::to_string(units.size()) +
                      " unit positions");
  }
  std::vector<double> design_pi(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    design_pi[i] = first_order_pi(design, units[i]);
  }
  if (pi) {
    if (pi->size() != units.size()) {
      throw DesignError("pi has the wrong length");
    }
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (!((*pi)[i] > 0.0 && (*pi)[i] <= 1.0)) {
        throw DesignError("pi must lie in (0, 1]");
      }
      if (std::abs((*pi)[i] - design_pi[i]) > 1e-12) {
        throw DesignError("stored pi for row " + std::to_string(i) +
                          " disagrees with the design");
      }
    }
  }
  ProbabilitySample s;
  s.frame = std::move(frame);
  s.pi = pi ? std::move(*pi) : std::move(design_pi);
  s.population_size = design.population_size();
  s.design = std::move(design);
  s.units = std::move(units);
  return s;
}

BigSample make_big_sample(Frame frame) {
  if (frame.n_outcomes() == 0) {
    throw SchemaError("big-data sample needs at least one outcome column");
  }
  for (const auto& r : frame.records()) {
    for (double v : r.y) {
      if (!std::isfinite(v)) {
        throw SchemaError("big-data sample has a missing outcome at id " +
                          std::to_string(r.id));
      }
    }
  }
  return BigSample{std::move(frame)};
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double selection_linear_predictor(const SelectionModel& model,
                                  std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticLinear>) {
          if (m.coefficients.size() != x.size() + 1) {
            throw DimensionError("selection model expects " +
                                 std::to_string(m.coefficients.size() - 1) +
                                 " covariates");
          }
          double eta = m.coefficients[0];
          for (std::size_t j = 0; j < x.size(); ++j) {
            eta += m.coefficients[j + 1] * x[j];
          }
          return eta;
        } else {
          if (x.size() != 2) {
            throw DimensionError("nonlinear selection forms take 2 covariates");
          }
          if (m.form == NonlinearForm::kFactorial) {
            const double a = x[0] - 1.5, b = x[1] - 2.0;
            return m.intercept - 3.0 + a * a + b * b;
          }
          return m.intercept + x[0] + x[1] * x[1];
        }
      },
      model);
}

double selection_probability(const SelectionModel& model,
                             std::span<const double> x) {
  return logistic(selection_linear_predictor(model, x));
}

SelectionModel with_intercept(const SelectionModel& model, double intercept) {
  SelectionModel out = model;
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticLinear>) {
          m.coefficients.at(0) = intercept;
        } else {
          m.intercept = intercept;
        }
      },
      out);
  return out;
}

double calibrate_intercept(std::span<const double> offsets, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw DesignError("target mean probability must lie in (0, 1)");
  }
  if (offsets.empty()) throw EmptyFrameError("no units to calibrate over");
  auto mean_p = [&](double a) {
    double s = 0.0;
    for (double o : offsets) s += logistic(a + o);
    return s / static_cast<double>(offsets.size());
  };
  double lo = -1.0, hi = 1.0;
  double f_lo = mean_p(lo), f_hi = mean_p(hi);
  int expansions = 0;
  while (f_lo > target || f_hi < target) {
    if (++expansions > 60) {
      throw ConvergenceError("cannot bracket the target mean probability",
                             f_lo > target ? f_lo : f_hi);
    }
    if (f_lo > target) {
      lo *= 2.0;
      f_lo = mean_p(lo);
    }
    if (f_hi < target) {
      hi *= 2.0;
      f_hi = mean_p(hi);
    }
  }
  double mid = 0.5 * (lo + hi);
  double f_mid = mean_p(mid);
  for (int it = 0; it < 200 && std::abs(f_mid - target) > 1e-9; ++it) {
    if (f_mid < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;
    mid = next;
    f_mid = mean_p(mid);
  }
  if (std::abs(f_mid - target) > 1e-6) {
    throw ConvergenceError("bisection stalled before reaching the target",
                           f_mid);
  }
  return mid;
}

double calibrate_intercept(const Frame& population, const SelectionModel& model,
                           double target) {
  const SelectionModel base = with_intercept(model, 0.0);
  std::vector<double> offsets(population.n_rows());
  for (std::size_t i = 0; i < population.n_rows(); ++i) {
    offsets[i] = selection_linear_predictor(base, population[i].x);
  }
  return calibrate_intercept(offsets, target);
}

namespace {

// Draws n of the positions [begin, begin + count) and appends them.
void partial_fisher_yates(std::size_t begin, std::size_t count, std::size_t n,
                          Rng& rng, std::vector<std::size_t>& out) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_index(count - i);
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
  out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
}

}  // namespace

ProbabilitySample draw_sample_a(const Frame& population,
                                const DesignDescriptor& design, Rng& rng) {
  if (design.population_size() != population.n_rows()) {
    throw DesignError("design covers " +
                      std::to_string(design.population_size()) +
                      " units but the population has " +
                      std::to_string(population.n_rows()));
  }
  std::vector<std::size_t> units;
  if (const auto* d = std::get_if<Srswor>(&design.variant())) {
    units.reserve(d->sample_size);
    partial_fisher_yates(0, d->population_size, d->sample_size, rng, units);
  } else if (const auto* s = std::get_if<StratifiedSrswor>(&design.variant())) {
    for (std::size_t h = 0; h < s->strata.size(); ++h) {
      partial_fisher_yates(s->offsets[h], s->strata[h].population_size,
                           s->strata[h].sample_size, rng, units);
    }
  } else {
    throw DesignError("drawing from an explicit joint design is not supported");
  }
  Frame frame = population.subset(units);
  if (design.is_stratified()) {
    std::vector<UnitRecord> records = frame.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].stratum = static_cast<int>(design.stratum_of(units[i]));
    }
    FrameSchema schema = frame.schema();
    schema.has_stratum = true;
    frame = Frame(std::move(records), std::move(schema));
  }
  return make_probability_sample(std::move(frame), design, std::move(units));
}

BigSampleDraw draw_sample_b(const Frame& population,
                            std::span<const double> probabilities, Rng& rng) {
  if (probabilities.size() != population.n_rows()) {
    throw DimensionError("one selection probability per population row needed");
  }
  std::vector<UnitRecord> records = population.records();
  std::vector<std::size_t> units;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double p = probabilities[i];
    if (!(p > 0.0 && p <= 1.0)) {
      throw ModelError("selection probability " + std::to_string(p) +
                       " at row " + std::to_string(i) + " is outside (0, 1]");
    }
    records[i].delta_b = rng.bernoulli(p);
    if (records[i].delta_b) units.push_back(i);
  }
  BigSampleDraw out;
  out.population = Frame(std::move(records), population.schema());
  out.sample = make_big_sample(out.population.subset(units));
  out.units = std::move(units);
  return out;
}

BigSampleDraw draw_sample_b(const Frame& population,
                            const SelectionModel& model, Rng& rng) {
  std::vector<double> p(population.n_rows());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = selection_probability(model, population[i].x);
  }
  return draw_sample_b(population, p, rng);
}

}  // namespace massfuse
