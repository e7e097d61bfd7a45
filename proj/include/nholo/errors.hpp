#pragma once

#include <stdexcept>
#include <string>

namespace nholo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  DomainError(int coordinate, const std::string& what)
      : Error(what), coordinate_(coordinate) {}
  int coordinate() const { return coordinate_; }

 private:
  int coordinate_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}
  double error_estimate() const { return estimate_; }

 private:
  double estimate_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

#define NHOLO_ERROR(Name)          \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

NHOLO_ERROR(UnsupportedOrder);
NHOLO_ERROR(NonDifferentiable);
NHOLO_ERROR(DegenerateMetric);
NHOLO_ERROR(DegenerateVertical);
NHOLO_ERROR(ZeroDenominator);
NHOLO_ERROR(PoleOnPath);
NHOLO_ERROR(SingularChart);
NHOLO_ERROR(ChartViolation);
NHOLO_ERROR(NonMonotoneMap);
NHOLO_ERROR(NonConvergent);
NHOLO_ERROR(AnalyticPsiRequired);
NHOLO_ERROR(DegenerateFinsler);
NHOLO_ERROR(NoSolution);
NHOLO_ERROR(ConfigError);

#undef NHOLO_ERROR

// Failure inside the Finsler transform, tagged with its step (1..4).
class TransformError : public Error {
 public:
  TransformError(int step, const std::string& what, double defect = 0.0)
      : Error("step " + std::to_string(step) + ": " + what), step_(step), defect_(defect) {}
  int step() const { return step_; }
  double defect() const { return defect_; }

 private:
  int step_;
  double defect_;
};

}  // namespace nholo
