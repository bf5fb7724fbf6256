#pragma once

#include <stdexcept>
#include <string>

namespace kobasin {

// Every failure the library reports carries a kind so the CLI can map it to an
// exit code and a machine-readable error record.
enum class ErrorKind {
    NonConvergence,
    HypothesisViolation,
    ResonanceDegeneracy,
    DegreeDrop,
    BranchPointProximity,
    OutOfDomain,
    Disconnected,
    NoGraphReachable,
    ResourceCap,
    ShellEmpty,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace kobasin
