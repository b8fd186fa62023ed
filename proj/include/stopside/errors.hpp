#pragma once

#include <stdexcept>
#include <string>

namespace stopside {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
    NonConvergent,
    DivergentIntegral,
    NoRoot,
    OutOfDomain,
    ParameterOutOfRange,
    ParseError,
    NegativeReward,
    HypothesisViolated,
    Unsimulable,
    InvalidArgument,
    ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures of the numerical machinery, as opposed to bad input.
    bool is_numeric() const noexcept
    {
        return kind_ == ErrorKind::NonConvergent || kind_ == ErrorKind::DivergentIntegral
            || kind_ == ErrorKind::NoRoot || kind_ == ErrorKind::HypothesisViolated
            || kind_ == ErrorKind::Unsimulable;
    }

private:
    ErrorKind kind_;
};

/// Thrown by the reward expression parser.
class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string expected, const std::string& what)
        : Error(ErrorKind::ParseError, what), position_(position), expected_(std::move(expected))
    {
    }
    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

}  // namespace stopside
