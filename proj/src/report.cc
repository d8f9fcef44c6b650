#include "massfuse/report.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "massfuse/errors.h"

namespace massfuse {

std::string method_name(Method m) {
  switch (m) {
    case Method::kHt: return "HT";
    case Method::kIpw: return "IPW";
    case Method::kDr: return "DR";
    case Method::kNni: return "NNI";
    case Method::kKnn: return "KNN";
    case Method::kGam: return "GAM";
    case Method::kRc: return "RC";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Method m : kAllMethods) {
    if (method_name(m) == upper) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

EstimateReport make_report(Method method, double estimate, double variance) {
  EstimateReport r;
  r.method = method;
  r.estimate = estimate;
  if (variance < 0.0) {
    r.diagnostics["variance_clamped"] = variance;
    variance = 0.0;
  }
  r.variance = variance;
  r.stderr_ = std::sqrt(variance);
  r.ci95 = {estimate - kZ975 * r.stderr_, estimate + kZ975 * r.stderr_};
  return r;
}

std::string report_to_json(const EstimateReport& report, int indent) {
  nlohmann::ordered_json j;
  j["method"] = method_name(report.method);
  j["estimate"] = report.estimate;
  j["variance"] = report.variance;
  j["stderr"] = report.stderr_;
  j["ci95"] = {report.ci95.first, report.ci95.second};
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.diagnostics) {
    if (std::isfinite(v)) {
      meta[k] = v;
    } else {
      meta[k] = nullptr;
    }
  }
  for (const auto& [k, v] : report.notes) meta[k] = v;
  j["meta"] = meta;
  return j.dump(indent);
}

}  // namespace massfuse
