#include "massfuse/frame.h"

#include <algorithm>
#include <unordered_set>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

std::size_t find_name(const std::vector<std::string>& names,
                      std::string_view name, const char* kind) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw SchemaError(std::string("unknown ") + kind + " '" +
                      std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

void check_ids_unique(const std::vector<UnitRecord>& records) {
  bool increasing = true;
  for (std::size_t i = 1; i < records.size() && increasing; ++i) {
    increasing = records[i - 1].id < records[i].id;
  }
  if (increasing) return;
  std::unordered_set<std::int64_t> seen;
  seen.reserve(records.size());
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      throw SchemaError("duplicate id " + std::to_string(r.id));
    }
  }
}

}  // namespace

Frame::Frame(std::vector<UnitRecord> records, FrameSchema schema)
    : records_(std::move(records)), schema_(std::move(schema)) {
  const std::size_t p = schema_.covariates.size();
  const std::size_t q = schema_.outcomes.size();
  std::vector<std::size_t> binary;
  for (const auto& name : schema_.binary_outcomes) {
    binary.push_back(find_name(schema_.outcomes, name, "outcome"));
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.x.size() != p) {
      throw DimensionError("record " + std::to_string(r.id) + " has " +
                           std::to_string(r.x.size()) + " covariates, expected " +
                           std::to_string(p));
    }
    if (r.y.size() != q) {
      throw DimensionError("record " + std::to_string(r.id) + " has " +
                           std::to_string(r.y.size()) + " outcomes, expected " +
                           std::to_string(q));
    }
    for (std::size_t j : binary) {
      if (r.y[j] != 0.0 && r.y[j] != 1.0) {
        throw SchemaError("binary outcome '" + schema_.outcomes[j] +
                          "' has value " + std::to_string(r.y[j]) +
                          " at record " + std::to_string(r.id));
      }
    }
  }
  check_ids_unique(records_);
}

std::size_t Frame::covariate_index(std::string_view name) const {
  return find_name(schema_.covariates, name, "covariate");
}

std::size_t Frame::outcome_index(std::string_view name) const {
  return find_name(schema_.outcomes, name, "outcome");
}

bool Frame::outcome_is_binary(std::size_t j) const {
  if (j >= schema_.outcomes.size()) return false;
  const auto& b = schema_.binary_outcomes;
  return std::find(b.begin(), b.end(), schema_.outcomes[j]) != b.end();
}

RowMatrix Frame::covariate_matrix() const {
  RowMatrix m(records_.size(), schema_.covariates.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    for (std::size_t j = 0; j < schema_.covariates.size(); ++j) {
      m(i, j) = records_[i].x[j];
    }
  }
  return m;
}

Eigen::VectorXd Frame::outcome_column(std::size_t j) const {
  if (j >= schema_.outcomes.size()) {
    throw IndexError("outcome index " + std::to_string(j) + " out of range");
  }
  Eigen::VectorXd v(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) v[i] = records_[i].y[j];
  return v;
}

Frame Frame::subset(std::span<const std::size_t> rows) const {
  Frame out;
  out.schema_ = schema_;
  out.records_.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= records_.size()) {
      throw IndexError("row " + std::to_string(r) + " out of range");
    }
    out.records_.push_back(records_[r]);
  }
  check_ids_unique(out.records_);
  return out;
}

double apply_g(const GFunction& g, std::span<const double> y) {
  auto at = [&](std::size_t j) {
    if (j >= y.size()) {
      throw IndexError("g references outcome " + std::to_string(j) +
                       " but the record has " + std::to_string(y.size()));
    }
    return y[j];
  };
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, IdentityG>) {
          return at(f.outcome);
        } else if constexpr (std::is_same_v<T, IndicatorG>) {
          return at(f.outcome) < f.threshold ? 1.0 : 0.0;
        } else {
          return at(f.outcome_a) * at(f.outcome_b);
        }
      },
      g);
}

double apply_g(const GFunction& g, const UnitRecord& record) {
  return apply_g(g, std::span<const double>(record.y));
}

Eigen::VectorXd apply_g(const GFunction& g, const Frame& frame) {
  Eigen::VectorXd v(frame.n_rows());
  for (std::size_t i = 0; i < frame.n_rows(); ++i) v[i] = apply_g(g, frame[i]);
  return v;
}

std::string describe(const GFunction& g) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, IdentityG>) {
          return "identity(" + std::to_string(f.outcome) + ")";
        } else if constexpr (std::is_same_v<T, IndicatorG>) {
          return "indicator(" + std::to_string(f.outcome) + "<" +
                 std::to_string(f.threshold) + ")";
        } else {
          return "product(" + std::to_string(f.outcome_a) + "," +
                 std::to_string(f.outcome_b) + ")";
        }
      },
      g);
}

std::size_t max_outcome_index(const GFunction& g) {
  return std::visit(
      [](const auto& f) -> std::size_t {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ProductG>) {
          return std::max(f.outcome_a, f.outcome_b);
        } else {
          return f.outcome;
        }
      },
      g);
}

}  // namespace massfuse
