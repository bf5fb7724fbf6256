#include "kobasin/errors.hpp"

namespace kobasin {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::HypothesisViolation: return "HypothesisViolation";
        case ErrorKind::ResonanceDegeneracy: return "ResonanceDegeneracy";
        case ErrorKind::DegreeDrop: return "DegreeDrop";
        case ErrorKind::BranchPointProximity: return "BranchPointProximity";
        case ErrorKind::OutOfDomain: return "OutOfDomain";
        case ErrorKind::Disconnected: return "Disconnected";
        case ErrorKind::NoGraphReachable: return "NoGraphReachable";
        case ErrorKind::ResourceCap: return "ResourceCap";
        case ErrorKind::ShellEmpty: return "ShellEmpty";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Io: return "IoError";
    }
    return "Unknown";
}

}  // namespace kobasin
