#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sparsegap {

// Domain error carrying a stable machine-readable name. The CLI prints the
// name verbatim on stderr and maps every Error to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define SPARSEGAP_ERROR_TYPE(NAME)                                        \
  class NAME : public Error {                                             \
   public:                                                                \
    explicit NAME(const std::string& what) : Error(#NAME, what) {}        \
  };

SPARSEGAP_ERROR_TYPE(InvalidGroundSet)
SPARSEGAP_ERROR_TYPE(InvalidInstance)
SPARSEGAP_ERROR_TYPE(NotACover)
SPARSEGAP_ERROR_TYPE(SparsityViolation)
SPARSEGAP_ERROR_TYPE(NotASolution)
SPARSEGAP_ERROR_TYPE(DecodeInconsistency)
SPARSEGAP_ERROR_TYPE(BudgetExceeded)
SPARSEGAP_ERROR_TYPE(ShapeError)
SPARSEGAP_ERROR_TYPE(ZeroVector)
SPARSEGAP_ERROR_TYPE(NonConverged)
SPARSEGAP_ERROR_TYPE(CalibrationFailed)
SPARSEGAP_ERROR_TYPE(ConstructionFailed)
SPARSEGAP_ERROR_TYPE(PrecisionTooCoarse)
SPARSEGAP_ERROR_TYPE(InvalidAdvice)
SPARSEGAP_ERROR_TYPE(PreconditionError)
SPARSEGAP_ERROR_TYPE(OutputExists)

#undef SPARSEGAP_ERROR_TYPE

}  // namespace sparsegap
