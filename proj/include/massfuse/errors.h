// Exception types thrown across the library. Every error derives from
// massfuse::Error so callers can catch the whole family at once.

#ifndef MASSFUSE_ERRORS_H_
#define MASSFUSE_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace massfuse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input and data-model errors.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& detail)
      : Error("parse error at row " + std::to_string(row) + ", column '" +
              column + "': " + detail),
        row_(row),
        column_(std::move(column)) {}

  // 1-based data row (the header is row 0).
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class EmptyFrameError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IOError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Sampling designs and selection models.
class DesignError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class VarianceUndefinedError : public Error {
 public:
  using Error::Error;
};

// Numerical failures.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_value)
      : Error(what), last_value_(last_value) {}

  // Last objective value (deviance, mean probability, ...) before giving up.
  double last_value() const { return last_value_; }

 private:
  double last_value_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class CollinearConstraintError : public Error {
 public:
  CollinearConstraintError(std::string component)
      : Error("calibration constraint '" + component +
              "' is collinear with the other constraints"),
        component_(std::move(component)) {}

  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

class BasisError : public Error {
 public:
  using Error::Error;
};

class DonorPoolError : public Error {
 public:
  using Error::Error;
};

class RatioUndefinedError : public Error {
 public:
  using Error::Error;
};

class ExtremeWeightError : public Error {
 public:
  using Error::Error;
};

}  // namespace massfuse

#endif  // MASSFUSE_ERRORS_H_
