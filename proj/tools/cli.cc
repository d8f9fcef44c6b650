#include "cli.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "massfuse/csv.h"
#include "massfuse/errors.h"
#include "massfuse/estimators.h"
#include "massfuse/harness.h"
#include "massfuse/matching.h"

namespace massfuse::cli {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : split(s, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-') {
    throw ConfigError(what + " '" + s + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    return parse_double(s, 0, what);
  } catch (const ParseError&) {
    throw ConfigError(what + " '" + s + "' is not a number");
  }
}

// Target specification: NAME, identity:NAME, indicator:NAME:T,
// product:A:B, or cond:A:B for the mean of A among units with B = 1.
struct TargetSpec {
  std::string kind;
  std::vector<std::string> outcomes;
  double threshold = 0.0;
};

TargetSpec parse_target(const std::string& text) {
  const auto parts = split(text, ':');
  TargetSpec t;
  if (parts.size() == 1) {
    t.kind = "identity";
    t.outcomes = {parts[0]};
  } else {
    t.kind = parts[0];
    if (t.kind == "identity" && parts.size() == 2) {
      t.outcomes = {parts[1]};
    } else if (t.kind == "indicator" && parts.size() == 3) {
      t.outcomes = {parts[1]};
      t.threshold = parse_real(parts[2], "indicator threshold");
    } else if ((t.kind == "product" || t.kind == "cond") && parts.size() == 3) {
      t.outcomes = {parts[1], parts[2]};
    } else {
      throw ConfigError("cannot parse --g '" + text + "'");
    }
  }
  for (const auto& o : t.outcomes) {
    if (o.empty()) throw ConfigError("empty outcome name in --g '" + text + "'");
  }
  return t;
}

std::size_t position_of(const std::vector<std::string>& names,
                        const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw ConfigError("outcome '" + name + "' is not in --outcomes");
  }
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<std::string> csv_header(const std::string& path) {
  return read_csv(path).header;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// srswor:N:n or stratified:PATH[:SCALE], PATH holding N_h and n_h columns
// (and optionally `stratum` labels) in stratum order.
DesignDescriptor parse_design(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts[0] == "srswor" && parts.size() == 3) {
    return DesignDescriptor::srswor(parse_size(parts[1], "population size"),
                                    parse_size(parts[2], "sample size"));
  }
  if (parts[0] == "stratified" && (parts.size() == 2 || parts.size() == 3)) {
    const double scale =
        parts.size() == 3 ? parse_real(parts[2], "stratum scale") : 1.0;
    CsvTable t;
    try {
      t = read_csv(parts[1]);
    } catch (const IOError& e) {
      throw ConfigError(e.what());
    }
    const auto n_pop = t.numeric_column("N_h");
    const auto n_smp = t.numeric_column("n_h");
    std::vector<MrtsStratumSpec> specs;
    for (std::size_t h = 0; h < n_pop.size(); ++h) {
      specs.push_back({static_cast<std::size_t>(n_pop[h]),
                       static_cast<std::size_t>(n_smp[h]), 0.0, 1.0});
    }
    specs = scale_strata(specs, scale);
    std::vector<Stratum> strata;
    const bool labelled = t.has_column("stratum");
    for (std::size_t h = 0; h < specs.size(); ++h) {
      strata.push_back({specs[h].population_size, specs[h].sample_size,
                        labelled ? t.rows[h][t.column("stratum")]
                                 : std::to_string(h + 1)});
    }
    return DesignDescriptor::stratified(std::move(strata));
  }
  throw ConfigError("cannot parse --design '" + text +
                    "' (expected srswor:N:n or stratified:PATH[:SCALE])");
}

// Population positions for the rows of A: SRS positions are arbitrary;
// stratified rows are placed in their stratum's block in file order.
std::vector<std::size_t> assign_units(const Frame& frame,
                                      const DesignDescriptor& design) {
  std::vector<std::size_t> units(frame.n_rows());
  if (const auto* s = std::get_if<StratifiedSrswor>(&design.variant())) {
    std::vector<std::size_t> used(s->strata.size(), 0);
    for (std::size_t i = 0; i < frame.n_rows(); ++i) {
      const int h = frame[i].stratum;
      if (h < 0 || static_cast<std::size_t>(h) >= s->strata.size()) {
        throw DesignError("row " + std::to_string(i + 1) + " has stratum " +
                          std::to_string(h) + " outside the design");
      }
      const auto hs = static_cast<std::size_t>(h);
      if (used[hs] >= s->strata[hs].population_size) {
        throw DesignError("stratum " + s->strata[hs].label +
                          " has more sampled rows than population units");
      }
      units[i] = s->offsets[hs] + used[hs]++;
    }
  } else {
    if (frame.n_rows() > design.population_size()) {
      throw DesignError("sample is larger than the population");
    }
    for (std::size_t i = 0; i < units.size(); ++i) units[i] = i;
  }
  return units;
}

struct SampleArgs {
  std::string a_path;
  std::string b_path;
  std::string covariates;
  std::string outcomes;
};

void add_sample_options(CLI::App* app, SampleArgs& s) {
  app->add_option("--a", s.a_path, "probability sample CSV")->required();
  app->add_option("--b", s.b_path, "big-data sample CSV")->required();
  app->add_option("--covariates", s.covariates,
                  "comma-separated matching covariates")
      ->required();
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::size_t> workers, bool progress,
                 std::ostream& out, std::ostream& err) {
  HarnessConfig cfg = read_harness_config(config_path);
  if (workers) {
    if (*workers == 0) throw ConfigError("--workers must be >= 1");
    cfg.workers = *workers;
  }
  ProgressFn fn;
  if (progress) {
    fn = [&err](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0) {
        err << "\r" << done << "/" << total << (done == total ? "\n" : "")
            << std::flush;
      }
    };
  }
  const RunReport report = run_experiment(cfg, fn);
  write_report(report, out_dir);
  out << format_report_text(report);
  out << "wrote " << (std::filesystem::path(out_dir) / "results.csv").string()
      << "\n";
  if (report.max_error_rate() > cfg.max_error_rate) {
    err << "error: failure rate " << report.max_error_rate()
        << " exceeds max_error_rate " << cfg.max_error_rate << "\n";
    return kExitEstimator;
  }
  return kExitOk;
}

struct EstimateArgs {
  SampleArgs samples;
  std::string method;
  std::string g;
  std::string design;
  std::size_t k = 5;
  std::string propensity_features;
  std::size_t gam_basis_size = 10;
  std::optional<double> gam_lambda;
  bool standardize = false;
};

int run_estimate(const EstimateArgs& args, std::ostream& out,
                 std::ostream& err) {
  const Method method = parse_method(args.method);
  const TargetSpec target = parse_target(args.g);
  const DesignDescriptor design = parse_design(args.design);

  FrameSchema schema;
  schema.covariates = split_list(args.samples.covariates);
  if (schema.covariates.empty()) throw ConfigError("--covariates is empty");
  schema.outcomes = split_list(args.samples.outcomes);
  if (schema.outcomes.empty()) {
    for (const auto& o : target.outcomes) {
      if (!contains(schema.outcomes, o)) schema.outcomes.push_back(o);
    }
  }
  if (target.kind == "cond") schema.binary_outcomes = {target.outcomes[1]};

  const auto b_header = csv_header(args.samples.b_path);
  FrameSchema b_schema = schema;
  b_schema.has_delta_b = contains(b_header, "delta_b");
  const BigSample b =
      make_big_sample(read_frame_csv(args.samples.b_path, b_schema));

  const auto a_header = csv_header(args.samples.a_path);
  FrameSchema a_schema = schema;
  const bool a_has_outcomes =
      std::all_of(schema.outcomes.begin(), schema.outcomes.end(),
                  [&](const std::string& o) { return contains(a_header, o); });
  if (!a_has_outcomes) {
    a_schema.outcomes.clear();
    a_schema.binary_outcomes.clear();
  }
  a_schema.has_delta_b = contains(a_header, "delta_b");
  a_schema.has_stratum = design.is_stratified();
  Frame a_frame = read_frame_csv(args.samples.a_path, a_schema);
  auto units = assign_units(a_frame, design);
  const ProbabilitySample a =
      make_probability_sample(std::move(a_frame), design, std::move(units));

  EstimatorOptions options;
  options.k = args.k;
  options.match.standardize = args.standardize;
  options.gam.basis_size = args.gam_basis_size;
  options.gam.lambda = args.gam_lambda;
  if (!args.propensity_features.empty()) {
    std::vector<std::size_t> features;
    for (const auto& name : split_list(args.propensity_features)) {
      const auto it =
          std::find(schema.covariates.begin(), schema.covariates.end(), name);
      if (it == schema.covariates.end()) {
        throw ConfigError("propensity feature '" + name +
                          "' is not a covariate");
      }
      features.push_back(static_cast<std::size_t>(it - schema.covariates.begin()));
    }
    options.propensity_features = features;
  }

  try {
    Workspace ws(a, b, options);
    EstimateReport report;
    const auto& names = schema.outcomes;
    if (target.kind == "identity") {
      report = ws.estimate(method, IdentityG{position_of(names, target.outcomes[0])});
    } else if (target.kind == "indicator") {
      report = ws.estimate(method, IndicatorG{position_of(names, target.outcomes[0]),
                                              target.threshold});
    } else if (target.kind == "product") {
      report = ws.estimate(method, ProductG{position_of(names, target.outcomes[0]),
                                            position_of(names, target.outcomes[1])});
    } else {
      const std::size_t num = position_of(names, target.outcomes[0]);
      const std::size_t den = position_of(names, target.outcomes[1]);
      report = ws.estimate_ratio(method, ProductG{num, den}, IdentityG{den});
    }
    report.notes["target"] = args.g;
    out << report_to_json(report) << "\n";
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    err << "error: " << method_name(method) << " failed: " << e.what() << "\n";
    return kExitEstimator;
  }
  return kExitOk;
}

struct MatchArgs {
  SampleArgs samples;
  std::size_t k = 1;
  bool standardize = false;
};

int run_match(const MatchArgs& args, std::ostream& out) {
  FrameSchema schema;
  schema.covariates = split_list(args.samples.covariates);
  if (schema.covariates.empty()) throw ConfigError("--covariates is empty");
  schema.has_delta_b = false;
  const Frame a = read_frame_csv(args.samples.a_path, schema);
  const Frame b = read_frame_csv(args.samples.b_path, schema);
  MatchOptions opts;
  opts.standardize = args.standardize;
  const MatchResult m =
      match_knn(a.covariate_matrix(), b.covariate_matrix(), args.k, opts);
  std::string text = "a_id,rank,donor_id,distance\n";
  for (std::size_t i = 0; i < m.n_queries; ++i) {
    const auto donors = m.donors(i);
    const auto dist = m.donor_distances(i);
    for (std::size_t r = 0; r < m.k; ++r) {
      text += std::to_string(a[i].id) + "," + std::to_string(r + 1) + "," +
              std::to_string(b[donors[r]].id) + "," + format_double(dist[r]) +
              "\n";
    }
  }
  out << text;
  return kExitOk;
}

// Errors caused by the inputs rather than by an estimator.
bool is_input_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) ||
         dynamic_cast<const SchemaError*>(&e) ||
         dynamic_cast<const ParseError*>(&e) ||
         dynamic_cast<const DesignError*>(&e) ||
         dynamic_cast<const DonorPoolError*>(&e) ||
         dynamic_cast<const DimensionError*>(&e) ||
         dynamic_cast<const EmptyFrameError*>(&e);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Mass imputation estimators for combining probability and "
               "big-data samples"};
  app.name("massfuse");
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo study");
  std::string config_path, out_dir;
  std::optional<std::size_t> workers;
  bool progress = false;
  simulate->add_option("--config", config_path, "JSON configuration")
      ->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_option("--workers", workers, "override the worker count");
  simulate->add_flag("--progress", progress, "report progress on stderr");

  auto* estimate = app.add_subcommand("estimate", "estimate one population mean");
  EstimateArgs est;
  add_sample_options(estimate, est.samples);
  estimate->add_option("--outcomes", est.samples.outcomes,
                       "comma-separated outcome columns (default: those in --g)");
  estimate->add_option("--method", est.method, "ht|ipw|dr|nni|knn|gam|rc")
      ->required();
  estimate->add_option("--g", est.g,
                       "NAME | indicator:NAME:T | product:A:B | cond:A:B")
      ->required();
  estimate->add_option("--design", est.design,
                       "srswor:N:n | stratified:PATH[:SCALE]")
      ->required();
  estimate->add_option("--k", est.k, "donors per unit for knn");
  estimate->add_option("--propensity-features", est.propensity_features,
                       "comma-separated covariates of the propensity model");
  estimate->add_option("--gam-basis", est.gam_basis_size,
                       "B-spline basis size per covariate");
  estimate->add_option("--gam-lambda", est.gam_lambda,
                       "fixed smoothing parameter (GCV when omitted)");
  estimate->add_flag("--standardize", est.standardize,
                     "standardize covariates before matching");

  auto* match = app.add_subcommand("match", "list nearest donors");
  MatchArgs mat;
  add_sample_options(match, mat.samples);
  match->add_option("--k", mat.k, "donors per unit");
  match->add_flag("--standardize", mat.standardize,
                  "standardize covariates before matching");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      return run_simulate(config_path, out_dir, workers, progress, out, err);
    }
    if (estimate->parsed()) return run_estimate(est, out, err);
    return run_match(mat, out);
  } catch (const Error& e) {
    if (is_input_error(e)) {
      err << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace massfuse::cli
