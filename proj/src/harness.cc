#include "massfuse/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "massfuse/csv.h"
#include "massfuse/errors.h"
#include "massfuse/estimators.h"

namespace massfuse {

namespace {

using nlohmann::json;

std::string experiment_name(Experiment e) {
  return e == Experiment::kFactorial ? "factorial" : "mrts";
}

template <typename T>
T get_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    return v.get<T>();
  } else {
    if (!v.is_number_unsigned()) {
      throw ConfigError(std::string(key) + " must be a non-negative integer");
    }
    return v.get<T>();
  }
}

std::vector<std::string> get_strings(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string(key) + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw ConfigError(std::string(key) + " must contain strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

struct Outcome {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double truth = std::numeric_limits<double>::quiet_NaN();
  bool covered = false;
  bool ok = false;
  std::string error;
};

struct CellKey {
  std::string target;
  Method method;
};

struct Truths {
  double mean_y1 = 0.0;
  double mean_y2 = 0.0;
  double cond = 0.0;
};

Truths population_truths(const Frame& pop) {
  Truths t;
  double s1 = 0.0, s2 = 0.0, s12 = 0.0;
  for (const auto& r : pop.records()) {
    s1 += r.y[0];
    if (r.y.size() > 1) {
      s2 += r.y[1];
      s12 += r.y[0] * r.y[1];
    }
  }
  const double n = static_cast<double>(pop.n_rows());
  t.mean_y1 = s1 / n;
  t.mean_y2 = s2 / n;
  t.cond = s2 > 0.0 ? s12 / s2 : std::numeric_limits<double>::quiet_NaN();
  return t;
}

// Rng stream of a scenario; fixed per (experiment, label) so results do not
// depend on which other scenarios are configured.
std::uint64_t scenario_stream(Experiment e, const Scenario& s) {
  const std::uint64_t base = e == Experiment::kFactorial ? 0 : 100;
  if (s.label == "I") return base + 1;
  if (s.label == "II") return base + 2;
  if (s.label == "III") return base + 3;
  return base + 4;
}

std::vector<Outcome> run_replicate(const HarnessConfig& cfg,
                                   const Scenario& scenario,
                                   const std::vector<CellKey>& cells,
                                   std::size_t replicate) {
  std::vector<Outcome> out(cells.size());
  try {
    Rng rng = Rng::for_stream(cfg.master_seed,
                              scenario_stream(cfg.experiment, scenario),
                              replicate);
    Frame pop;
    SelectionModel selection;
    DesignDescriptor design;
    if (cfg.experiment == Experiment::kFactorial) {
      pop = generate_factorial_population(cfg.population_size, scenario.outcome,
                                          rng);
      selection = factorial_selection(scenario.selection);
      design = DesignDescriptor::srswor(cfg.population_size, cfg.sample_size);
    } else {
      const auto strata = scale_strata(mrts_strata(), cfg.scale);
      pop = generate_mrts_population(strata, scenario.outcome, rng);
      selection = mrts_selection(scenario.selection, pop);
      design = mrts_design(strata);
    }
    const Truths truth = population_truths(pop);
    BigSampleDraw b = draw_sample_b(pop, selection, rng);
    const ProbabilitySample a = draw_sample_a(b.population, design, rng);

    EstimatorOptions options;
    options.k = cfg.k;
    options.gam.basis_size = cfg.gam_basis_size;
    options.gam.lambda = cfg.gam_lambda;
    // Working propensity model: intercept and the second covariate (x2 in
    // the factorial design, z in the stratified one).
    options.propensity_features = std::vector<std::size_t>{1};
    Workspace ws(a, b.sample, options);

    for (std::size_t c = 0; c < cells.size(); ++c) {
      Outcome& o = out[c];
      const std::string& target = cells[c].target;
      try {
        EstimateReport r;
        if (target == "mean_y1" || target == "mean_y") {
          o.truth = truth.mean_y1;
          r = ws.estimate(cells[c].method, IdentityG{0});
        } else if (target == "mean_y2") {
          o.truth = truth.mean_y2;
          r = ws.estimate(cells[c].method, IdentityG{1});
        } else {
          o.truth = truth.cond;
          r = ws.estimate_ratio(cells[c].method, ProductG{0, 1}, IdentityG{1});
        }
        o.estimate = r.estimate;
        o.std_error = r.stderr_;
        o.covered = r.covers(o.truth);
        o.ok = std::isfinite(r.estimate) && std::isfinite(r.stderr_);
        if (!o.ok) o.error = "non-finite estimate";
      } catch (const Error& e) {
        o.ok = false;
        o.error = e.what();
      }
    }
  } catch (const Error& e) {
    for (auto& o : out) {
      o.ok = false;
      o.error = e.what();
    }
  }
  return out;
}

CellSummary summarize(const std::string& scenario, const CellKey& key,
                      const std::vector<std::vector<Outcome>>& results,
                      std::size_t c) {
  CellSummary s;
  s.scenario = scenario;
  s.target = key.target;
  s.method = key.method;
  s.replicates = results.size();
  double sum_err = 0.0, sum_est = 0.0, sum_se = 0.0;
  std::size_t hits = 0, ok = 0;
  for (const auto& rep : results) {
    const Outcome& o = rep[c];
    s.truths.push_back(o.truth);
    if (!o.ok) {
      ++s.errors;
      if (s.first_error.empty()) s.first_error = o.error;
      s.estimates.push_back(std::numeric_limits<double>::quiet_NaN());
      s.std_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    s.estimates.push_back(o.estimate);
    s.std_errors.push_back(o.std_error);
    ++ok;
    sum_err += o.estimate - o.truth;
    sum_est += o.estimate;
    sum_se += o.std_error;
    if (o.covered) ++hits;
  }
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    s.bias = sum_err / n;
    s.mean_est_se = sum_se / n;
    s.coverage = static_cast<double>(hits) / n;
    const double mean = sum_est / n;
    double ss = 0.0;
    for (const auto& rep : results) {
      if (rep[c].ok) ss += (rep[c].estimate - mean) * (rep[c].estimate - mean);
    }
    s.mc_se = ok > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.bias = s.mc_se = s.coverage = s.mean_est_se = nan;
  }
  return s;
}

std::string fixed(double v, int width, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
  return buf;
}

}  // namespace

std::vector<std::string> experiment_targets(Experiment experiment) {
  if (experiment == Experiment::kFactorial) {
    return {"mean_y1", "mean_y2", "cond_mean_y1_given_y2"};
  }
  return {"mean_y"};
}

HarnessConfig parse_harness_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  HarnessConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "experiment") {
        if (!value.is_string()) throw ConfigError("experiment must be a string");
        const std::string e = value.get<std::string>();
        if (e == "factorial") {
          c.experiment = Experiment::kFactorial;
        } else if (e == "mrts") {
          c.experiment = Experiment::kMrts;
        } else {
          throw ConfigError("experiment must be 'factorial' or 'mrts'");
        }
      } else if (key == "scenarios") {
        c.scenarios = get_strings(j, "scenarios");
      } else if (key == "population_size") {
        c.population_size = get_number<std::size_t>(j, "population_size");
      } else if (key == "sample_size") {
        c.sample_size = get_number<std::size_t>(j, "sample_size");
      } else if (key == "replicates") {
        c.replicates = get_number<std::size_t>(j, "replicates");
      } else if (key == "master_seed") {
        c.master_seed = get_number<std::uint64_t>(j, "master_seed");
      } else if (key == "k") {
        c.k = get_number<std::size_t>(j, "k");
      } else if (key == "scale") {
        c.scale = get_number<double>(j, "scale");
      } else if (key == "workers") {
        c.workers = get_number<std::size_t>(j, "workers");
      } else if (key == "max_error_rate") {
        c.max_error_rate = get_number<double>(j, "max_error_rate");
      } else if (key == "methods") {
        c.methods.clear();
        for (const auto& m : get_strings(j, "methods")) {
          c.methods.push_back(parse_method(m));
        }
      } else if (key == "targets") {
        c.targets = get_strings(j, "targets");
      } else if (key == "gam") {
        if (!value.is_object()) throw ConfigError("gam must be an object");
        for (const auto& [gk, gv] : value.items()) {
          if (gk == "basis_size") {
            c.gam_basis_size = get_number<std::size_t>(value, "basis_size");
          } else if (gk == "lambda") {
            if (gv.is_null()) {
              c.gam_lambda.reset();
            } else {
              c.gam_lambda = get_number<double>(value, "lambda");
            }
          } else {
            throw ConfigError("unknown key 'gam." + gk + "'");
          }
        }
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }

  if (c.replicates == 0) throw ConfigError("replicates must be >= 1");
  if (c.workers == 0) throw ConfigError("workers must be >= 1");
  if (c.k == 0) throw ConfigError("k must be >= 1");
  if (c.scenarios.empty()) throw ConfigError("scenarios must not be empty");
  for (const auto& s : c.scenarios) scenario_from_label(s);
  if (c.methods.empty()) throw ConfigError("methods must not be empty");
  if (c.experiment == Experiment::kFactorial &&
      (c.sample_size == 0 || c.sample_size > c.population_size)) {
    throw ConfigError("sample_size must lie in [1, population_size]");
  }
  if (!(c.scale > 0.0) || !std::isfinite(c.scale)) {
    throw ConfigError("scale must be positive");
  }
  if (!(c.max_error_rate >= 0.0 && c.max_error_rate <= 1.0)) {
    throw ConfigError("max_error_rate must lie in [0, 1]");
  }
  if (c.gam_lambda && !(*c.gam_lambda >= 0.0)) {
    throw ConfigError("gam.lambda must be >= 0");
  }
  if (c.gam_basis_size < 5) throw ConfigError("gam.basis_size must be >= 5");
  const auto valid = experiment_targets(c.experiment);
  for (const auto& t : c.targets) {
    if (std::find(valid.begin(), valid.end(), t) == valid.end()) {
      throw ConfigError("unknown target '" + t + "' for experiment " +
                        experiment_name(c.experiment));
    }
  }
  return c;
}

HarnessConfig read_harness_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_harness_config(ss.str());
}

std::string harness_config_to_json(const HarnessConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_name(c.experiment);
  j["scenarios"] = c.scenarios;
  j["population_size"] = c.population_size;
  j["sample_size"] = c.sample_size;
  j["replicates"] = c.replicates;
  j["master_seed"] = c.master_seed;
  j["k"] = c.k;
  j["scale"] = c.scale;
  j["workers"] = c.workers;
  j["max_error_rate"] = c.max_error_rate;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["targets"] = c.targets.empty() ? experiment_targets(c.experiment) : c.targets;
  nlohmann::ordered_json gam;
  gam["basis_size"] = c.gam_basis_size;
  if (c.gam_lambda) {
    gam["lambda"] = *c.gam_lambda;
  } else {
    gam["lambda"] = nullptr;
  }
  j["gam"] = gam;
  return j.dump(2);
}

const CellSummary* RunReport::find(const std::string& scenario,
                                   const std::string& target,
                                   Method method) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.target == target && c.method == method) {
      return &c;
    }
  }
  return nullptr;
}

double RunReport::max_error_rate() const {
  double m = 0.0;
  for (const auto& c : cells) m = std::max(m, c.error_rate());
  return m;
}

RunReport run_experiment(const HarnessConfig& config, ProgressFn progress) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config;
  const std::vector<std::string> targets =
      config.targets.empty() ? experiment_targets(config.experiment)
                             : config.targets;
  std::vector<CellKey> cells;
  for (const auto& t : targets) {
    for (Method m : config.methods) cells.push_back({t, m});
  }
  const std::size_t total = config.replicates * config.scenarios.size();
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  for (const auto& label : config.scenarios) {
    const Scenario scenario = scenario_from_label(label);
    std::vector<std::vector<Outcome>> results(config.replicates);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= config.replicates) return;
        try {
          results[r] = run_replicate(config, scenario, cells, r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = config.replicates;
          return;
        }
        const std::size_t d = done.fetch_add(1) + 1;
        if (progress) {
          std::lock_guard<std::mutex> lock(progress_mutex);
          progress(d, total);
        }
      }
    };
    const std::size_t n_workers = std::min(config.workers, config.replicates);
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      report.cells.push_back(summarize(label, cells[c], results, c));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

RunReport run_factorial(const HarnessConfig& config, ProgressFn progress) {
  HarnessConfig c = config;
  c.experiment = Experiment::kFactorial;
  return run_experiment(c, std::move(progress));
}

RunReport run_mrts(const HarnessConfig& config, ProgressFn progress) {
  HarnessConfig c = config;
  c.experiment = Experiment::kMrts;
  return run_experiment(c, std::move(progress));
}

std::string format_report_csv(const RunReport& report) {
  std::string out =
      "scenario,target,estimator,bias,mc_se,coverage,mean_est_se,errors,"
      "replicates\n";
  for (const auto& c : report.cells) {
    out += c.scenario + "," + c.target + "," + method_name(c.method) + "," +
           format_double(c.bias) + "," + format_double(c.mc_se) + "," +
           format_double(c.coverage) + "," + format_double(c.mean_est_se) +
           "," + std::to_string(c.errors) + "," + std::to_string(c.replicates) +
           "\n";
  }
  return out;
}

std::string format_report_text(const RunReport& report) {
  std::ostringstream os;
  const HarnessConfig& cfg = report.config;
  os << "experiment: " << experiment_name(cfg.experiment)
     << "  replicates: " << cfg.replicates << "  seed: " << cfg.master_seed;
  if (cfg.experiment == Experiment::kFactorial) {
    os << "  N: " << cfg.population_size << "  n: " << cfg.sample_size;
  } else {
    os << "  scale: " << cfg.scale;
  }
  os << "  k: " << cfg.k << "\n";
  os << "Bias, S.E. (Monte Carlo) and C.R. (95% interval coverage), all x 100\n";

  std::vector<std::string> targets, scenarios;
  for (const auto& c : report.cells) {
    if (std::find(targets.begin(), targets.end(), c.target) == targets.end()) {
      targets.push_back(c.target);
    }
    if (std::find(scenarios.begin(), scenarios.end(), c.scenario) ==
        scenarios.end()) {
      scenarios.push_back(c.scenario);
    }
  }
  for (const auto& t : targets) {
    os << "\n" << t << "\n";
    os << "        ";
    for (const auto& s : scenarios) {
      std::string head = "Scenario " + s;
      head.resize(27, ' ');
      os << head;
    }
    os << "\n        ";
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%7s  %7s  %7s  ", "Bias", "S.E.", "C.R.");
      os << buf;
    }
    os << "\n";
    for (Method m : cfg.methods) {
      std::string name = method_name(m);
      name.resize(8, ' ');
      os << name;
      for (const auto& s : scenarios) {
        const CellSummary* c = report.find(s, t, m);
        if (c == nullptr) {
          os << std::string(27, ' ');
          continue;
        }
        os << fixed(100.0 * c->bias, 7, 1) << "  " << fixed(100.0 * c->mc_se, 7, 1)
           << "  " << fixed(100.0 * c->coverage, 7, 1) << "  ";
      }
      os << "\n";
    }
  }
  bool any_errors = false;
  for (const auto& c : report.cells) {
    if (c.errors == 0) continue;
    if (!any_errors) os << "\nfailed replicates\n";
    any_errors = true;
    os << "  " << c.scenario << " " << c.target << " " << method_name(c.method)
       << ": " << c.errors << " (" << c.first_error << ")\n";
  }
  return os.str();
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IOError("cannot write " + (dir / name).string());
    out << text;
    if (!out) throw IOError("failed writing " + (dir / name).string());
  };
  write("results.csv", format_report_csv(report));
  write("results.txt", format_report_text(report));
  write("config.json", harness_config_to_json(report.config) + "\n");
}

}  // namespace massfuse
