#pragma once

#include <stdexcept>
#include <string>

namespace geoflow {

/// Base class for all domain errors raised by the library. The CLI maps
/// these to exit code 1 and prints name() together with the message.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define GEOFLOW_DEFINE_ERROR(ClassName)                         \
  class ClassName : public Error {                              \
   public:                                                      \
    explicit ClassName(const std::string& what)                 \
        : Error(#ClassName, what) {}                            \
  }

GEOFLOW_DEFINE_ERROR(CutLocusError);
GEOFLOW_DEFINE_ERROR(EmptyNeighborhoodError);
GEOFLOW_DEFINE_ERROR(DegenerateSpectrumError);
GEOFLOW_DEFINE_ERROR(HemisphereError);
GEOFLOW_DEFINE_ERROR(AmbiguousProjectionError);
GEOFLOW_DEFINE_ERROR(SeparationError);
GEOFLOW_DEFINE_ERROR(EndOfFlowError);
GEOFLOW_DEFINE_ERROR(ZeroSpreadError);
GEOFLOW_DEFINE_ERROR(LengthMismatchError);
GEOFLOW_DEFINE_ERROR(ParseError);
GEOFLOW_DEFINE_ERROR(NormalizationError);
GEOFLOW_DEFINE_ERROR(IOError);

#undef GEOFLOW_DEFINE_ERROR

/// Raised when an iteration fails to reach its tolerance; carries the best
/// residual seen so the caller can judge how close it got.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double best_residual)
      : Error("NonConvergenceError", what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Raised by the hard-margin solver when the two point sets cannot be
/// separated; carries one witness pair (indices into the two inputs).
class InseparableError : public Error {
 public:
  InseparableError(const std::string& what, std::size_t index_a,
                   std::size_t index_b)
      : Error("InseparableError", what), index_a_(index_a), index_b_(index_b) {}
  std::size_t index_a() const noexcept { return index_a_; }
  std::size_t index_b() const noexcept { return index_b_; }

 private:
  std::size_t index_a_;
  std::size_t index_b_;
};

}  // namespace geoflow
