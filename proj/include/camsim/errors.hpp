#pragma once

#include <stdexcept>
#include <string>

namespace camsim {

enum class Errc {
    DuplicateLabel,
    DanglingNode,
    BadArity,
    NonPositiveResistance,
    UnknownSource,
    UnknownDevice,
    UnknownElement,
    UnboundNode,
    NoDcPath,
    NonFiniteInput,
    Precondition,
    SingularMatrix,
    NoConvergence,
    WindowTooLarge,
    DegenerateTrace,
    NonUniformPitch,
    DegenerateRegression,
    InvalidVariant,
    ProbeMissing,
    ConfigError,
    IoError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::DuplicateLabel: return "DuplicateLabel";
        case Errc::DanglingNode: return "DanglingNode";
        case Errc::BadArity: return "BadArity";
        case Errc::NonPositiveResistance: return "NonPositiveResistance";
        case Errc::UnknownSource: return "UnknownSource";
        case Errc::UnknownDevice: return "UnknownDevice";
        case Errc::UnknownElement: return "UnknownElement";
        case Errc::UnboundNode: return "UnboundNode";
        case Errc::NoDcPath: return "NoDcPath";
        case Errc::NonFiniteInput: return "NonFiniteInput";
        case Errc::Precondition: return "Precondition";
        case Errc::SingularMatrix: return "SingularMatrix";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::WindowTooLarge: return "WindowTooLarge";
        case Errc::DegenerateTrace: return "DegenerateTrace";
        case Errc::NonUniformPitch: return "NonUniformPitch";
        case Errc::DegenerateRegression: return "DegenerateRegression";
        case Errc::InvalidVariant: return "InvalidVariant";
        case Errc::ProbeMissing: return "ProbeMissing";
        case Errc::ConfigError: return "ConfigError";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; the code discriminates failure modes.
class SimError final : public std::runtime_error {
public:
    SimError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw SimError(code, what);
}

}  // namespace camsim
