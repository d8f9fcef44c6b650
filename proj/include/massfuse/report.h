// Estimator output shared by every method.

#ifndef MASSFUSE_REPORT_H_
#define MASSFUSE_REPORT_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace massfuse {

enum class Method { kHt, kIpw, kDr, kNni, kKnn, kGam, kRc };

inline constexpr Method kAllMethods[] = {Method::kHt,  Method::kIpw,
                                         Method::kDr,  Method::kNni,
                                         Method::kKnn, Method::kGam,
                                         Method::kRc};

// Normal 97.5% quantile used for every interval.
inline constexpr double kZ975 = 1.959964;

// "HT", "IPW", ...
std::string method_name(Method m);
// Case-insensitive; throws ConfigError on an unknown name.
Method parse_method(std::string_view name);

struct EstimateReport {
  Method method = Method::kHt;
  double estimate = 0.0;
  double variance = 0.0;
  double stderr_ = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  std::map<std::string, double> diagnostics;
  std::map<std::string, std::string> notes;

  bool covers(double truth) const {
    return ci95.first <= truth && truth <= ci95.second;
  }
};

// Fills stderr and ci95. A negative variance (possible for the
// product-of-marginals double sum) is clamped to 0 and flagged in
// diagnostics["variance_clamped"].
EstimateReport make_report(Method method, double estimate, double variance);

// One JSON object: method, estimate, variance, stderr, ci95 [lo, hi], meta.
std::string report_to_json(const EstimateReport& report, int indent = 2);

}  // namespace massfuse

#endif  // MASSFUSE_REPORT_H_
