#include "stopside/errors.hpp"

namespace stopside {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::DivergentIntegral: return "DivergentIntegral";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NegativeReward: return "NegativeReward";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::Unsimulable: return "Unsimulable";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace stopside
