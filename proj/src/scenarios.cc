#include "massfuse/scenarios.h"

#include <cmath>

#include "massfuse/csv.h"
#include "massfuse/errors.h"

namespace massfuse {

Scenario scenario_from_label(std::string_view label) {
  if (label == "I") return {"I", ModelForm::kLinear, ModelForm::kLinear};
  if (label == "II") return {"II", ModelForm::kLinear, ModelForm::kNonlinear};
  if (label == "III") return {"III", ModelForm::kNonlinear, ModelForm::kLinear};
  if (label == "IV") return {"IV", ModelForm::kNonlinear, ModelForm::kNonlinear};
  throw ConfigError("unknown scenario '" + std::string(label) +
                    "' (expected I, II, III or IV)");
}

Frame generate_factorial_population(std::size_t population_size,
                                    ModelForm outcome, Rng& rng) {
  FrameSchema schema;
  schema.covariates = {"x1", "x2"};
  schema.outcomes = {"y1", "y2"};
  schema.binary_outcomes = {"y2"};
  std::vector<UnitRecord> records(population_size);
  for (std::size_t i = 0; i < population_size; ++i) {
    const double x1 = rng.normal(1.0, 1.0);
    const double x2 = rng.exponential(1.0);
    const double alpha = rng.normal();
    const double eps = rng.normal();
    double m;
    if (outcome == ModelForm::kLinear) {
      m = 1.0 + x1 + x2 + alpha;
    } else {
      const double a = x1 - 1.5;
      m = 0.5 * a * a + x2 * x2 + alpha;
    }
    const double y2 = rng.bernoulli(logistic(m)) ? 1.0 : 0.0;
    UnitRecord& r = records[i];
    r.id = static_cast<std::int64_t>(i);
    r.x = {x1, x2};
    r.y = {m + eps, y2};
  }
  return Frame(std::move(records), std::move(schema));
}

SelectionModel factorial_selection(ModelForm selection) {
  if (selection == ModelForm::kLinear) return LogisticLinear{{0.0, 0.0, 1.0}};
  return LogisticNonlinear{NonlinearForm::kFactorial, 0.0};
}

const std::vector<MrtsStratumSpec>& mrts_strata() {
  static const std::vector<MrtsStratumSpec> table = {
      {366, 37, 16.8, 1.1},      {20, 5, 16.7, 0.8},
      {2015, 34, 16.6, 0.4},     {4646, 57, 16.4, 0.3},
      {7402, 74, 16.1, 0.4},     {700, 7, 15.6, 0.6},
      {12837, 103, 16.0, 0.4},   {17080, 115, 15.7, 0.4},
      {29808, 116, 15.6, 0.4},   {2400, 12, 15.5, 0.3},
      {41343, 184, 15.4, 0.4},   {57518, 196, 15.1, 0.4},
      {83465, 218, 14.8, 0.3},   {95244, 200, 14.5, 0.7},
      {115028, 220, 13.9, 0.5},  {342893, 336, 11.5, 1.1},
  };
  return table;
}

std::vector<MrtsStratumSpec> read_mrts_strata(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto n_h = t.numeric_column("N_h");
  const auto s_h = t.numeric_column("n_h");
  const auto mu = t.numeric_column("mu_x");
  const auto sd = t.numeric_column("sigma_x");
  std::vector<MrtsStratumSpec> out;
  for (std::size_t i = 0; i < n_h.size(); ++i) {
    out.push_back({static_cast<std::size_t>(n_h[i]),
                   static_cast<std::size_t>(s_h[i]), mu[i], sd[i]});
  }
  return out;
}

std::vector<MrtsStratumSpec> scale_strata(std::span<const MrtsStratumSpec> strata,
                                          double scale) {
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  std::vector<MrtsStratumSpec> out(strata.begin(), strata.end());
  for (auto& s : out) {
    const auto scaled = static_cast<std::size_t>(
        std::llround(scale * static_cast<double>(s.population_size)));
    s.population_size = std::max(scaled, s.sample_size);
  }
  return out;
}

DesignDescriptor mrts_design(std::span<const MrtsStratumSpec> strata) {
  std::vector<Stratum> s;
  for (std::size_t h = 0; h < strata.size(); ++h) {
    s.push_back({strata[h].population_size, strata[h].sample_size,
                 std::to_string(h + 1)});
  }
  return DesignDescriptor::stratified(std::move(s));
}

double solve_beta0(std::span<const double> without_intercept, double target) {
  if (without_intercept.empty()) throw EmptyFrameError("no values");
  double s = 0.0;
  for (double v : without_intercept) s += v;
  return target - s / static_cast<double>(without_intercept.size());
}

Frame generate_mrts_population(std::span<const MrtsStratumSpec> strata,
                               ModelForm outcome, Rng& rng, double target_mean) {
  FrameSchema schema;
  schema.covariates = {"x", "z"};
  schema.outcomes = {"y"};
  schema.has_stratum = true;
  std::size_t total = 0;
  for (const auto& s : strata) total += s.population_size;
  std::vector<UnitRecord> records;
  records.reserve(total);
  std::vector<double> pre;
  pre.reserve(total);
  const double noise_sd = std::sqrt(kMrtsNoiseVariance);
  for (std::size_t h = 0; h < strata.size(); ++h) {
    for (std::size_t i = 0; i < strata[h].population_size; ++i) {
      const double x = rng.normal(strata[h].mean, strata[h].sd);
      const double z = rng.normal(strata[h].mean, strata[h].sd);
      const double eps = rng.normal(0.0, noise_sd);
      pre.push_back(outcome == ModelForm::kLinear ? x + z + eps
                                                  : x * x + z * z + eps);
      UnitRecord r;
      r.id = static_cast<std::int64_t>(records.size());
      r.x = {x, z};
      r.stratum = static_cast<int>(h);
      records.push_back(std::move(r));
    }
  }
  const double beta0 = solve_beta0(pre, target_mean);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].y = {beta0 + pre[i]};
  }
  return Frame(std::move(records), std::move(schema));
}

SelectionModel mrts_selection(ModelForm selection, const Frame& population,
                              double target_rate) {
  SelectionModel base =
      selection == ModelForm::kLinear
          ? SelectionModel(LogisticLinear{{0.0, 0.0, 1.0}})
          : SelectionModel(LogisticNonlinear{NonlinearForm::kMrts, 0.0});
  const double a0 = calibrate_intercept(population, base, target_rate);
  return with_intercept(base, a0);
}

}  // namespace massfuse
