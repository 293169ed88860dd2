#pragma once

#include <stdexcept>
#include <string>

namespace ncvi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define NCVI_ERROR(Name)                                   \
  struct Name : Error {                                    \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

NCVI_ERROR(ContractViolation);
NCVI_ERROR(FactorizationError);
NCVI_ERROR(BoundaryOrExterior);
NCVI_ERROR(OracleFallbackNotConverged);
NCVI_ERROR(InnerNewtonDiverged);
NCVI_ERROR(InfeasibleSet);
NCVI_ERROR(InnerSolveFailed);
NCVI_ERROR(NotConverged);
NCVI_ERROR(SingularMatrix);
NCVI_ERROR(InsufficientData);
NCVI_ERROR(ParseError);
NCVI_ERROR(DimensionMismatch);
NCVI_ERROR(ConfigInvalid);
NCVI_ERROR(TooManyConstraints);
NCVI_ERROR(NoBracket);
NCVI_ERROR(NotDifferentiable);

#undef NCVI_ERROR

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace ncvi
