#pragma once

#include <stdexcept>
#include <string>

namespace aospr {

// Base for everything thrown by this library. ConfigError maps to exit
// code 2 at the CLI, all other errors to exit code 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

#define AOSPR_DEFINE_ERROR(Name)                 \
  class Name : public Error {                    \
   public:                                       \
    using Error::Error;                          \
  }

AOSPR_DEFINE_ERROR(CycleDetected);
AOSPR_DEFINE_ERROR(NoPath);
AOSPR_DEFINE_ERROR(PathExplosion);
AOSPR_DEFINE_ERROR(OutOfRange);
AOSPR_DEFINE_ERROR(BudgetViolation);
AOSPR_DEFINE_ERROR(NumericUnderflow);
AOSPR_DEFINE_ERROR(NumericOverflow);
AOSPR_DEFINE_ERROR(DivisionByZero);
AOSPR_DEFINE_ERROR(InternalInvariant);
AOSPR_DEFINE_ERROR(BudgetTooLarge);
AOSPR_DEFINE_ERROR(InfeasibleCover);
AOSPR_DEFINE_ERROR(ProbabilityOutOfRange);
AOSPR_DEFINE_ERROR(IoError);

#undef AOSPR_DEFINE_ERROR

}  // namespace aospr
