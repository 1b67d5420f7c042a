#pragma once

#include <stdexcept>
#include <string>

namespace mrtnet {

// Whether a failure is a rejected input/configuration (CLI exit 1) or a
// failure encountered while computing (CLI exit 2).
enum class ErrorKind { Validation, Runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define MRTNET_DEFINE_ERROR(NAME, KIND)                                            \
    class NAME : public Error {                                                    \
    public:                                                                         \
        explicit NAME(const std::string& what) : Error(ErrorKind::KIND, what) {}    \
    }

MRTNET_DEFINE_ERROR(IndexOutOfRangeError, Validation);
MRTNET_DEFINE_ERROR(SelfLoopError, Validation);
MRTNET_DEFINE_ERROR(InvalidProbabilityError, Validation);
MRTNET_DEFINE_ERROR(InvalidKernelError, Validation);
MRTNET_DEFINE_ERROR(LengthMismatchError, Validation);
MRTNET_DEFINE_ERROR(InvalidSpecError, Validation);
MRTNET_DEFINE_ERROR(RangeViolationError, Validation);
MRTNET_DEFINE_ERROR(PolicyOutOfRangeError, Validation);
MRTNET_DEFINE_ERROR(TooLargeError, Validation);
MRTNET_DEFINE_ERROR(ConfigInvalidError, Validation);
MRTNET_DEFINE_ERROR(ContractionViolatedError, Validation);

MRTNET_DEFINE_ERROR(TimeOutOfRangeError, Runtime);
MRTNET_DEFINE_ERROR(EmptyCellError, Runtime);
MRTNET_DEFINE_ERROR(EmptyEnsembleError, Runtime);
MRTNET_DEFINE_ERROR(DegenerateDenominatorError, Runtime);
MRTNET_DEFINE_ERROR(NoConvergenceError, Runtime);
MRTNET_DEFINE_ERROR(StaleSolutionError, Runtime);
MRTNET_DEFINE_ERROR(IoError, Runtime);

#undef MRTNET_DEFINE_ERROR

} // namespace mrtnet
