#pragma once

/// Error taxonomy shared by all modules. Every failure is reported as a
/// homloop::Error carrying a machine-readable code; the CLI maps codes to exit
/// statuses (contract violations versus operational errors).

#include <stdexcept>
#include <string>

namespace homloop {

enum class ErrorCode {
    // psys
    NotASaddle,
    TangentEigenvector,
    ProbeAmbiguous,
    ZeroField,
    FieldVanishesOnGrid,
    InvalidSystem,
    // flow
    SlidingDetected,
    NonTransversalCrossing,
    StepFailure,
    IntervalOutOfRange,
    // dichotomy
    HorizonTooShort,
    NotOnTransversal,
    PassageLeftRegion,
    // leaves
    NoConnection,
    NotConverged,
    WrongSection,
    MissedTransversal,
    // melnikov
    WeightOverflow,
    DegenerateZero,
    // loopmap
    OffSection,
    OutOfChart,
    BandViolation,
    LeftRegion,
    DegenerateInput,
    // scaling
    InsufficientGrid,
    // cli
    ConfigParse,
};

const char* to_string(ErrorCode code);

/// True for codes that signal a violated quantitative contract (a band or
/// bound failing) rather than an operational failure.
bool is_contract_violation(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace homloop
