#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gnas {

enum class ErrorCode
{
    InvalidArchitecture,
    InvalidBounds,
    ScheduleError,
    EvalFailed,
    Timeout,
    ProtocolError,
    WorkerDied,
    DegenerateInput,
    DivideByZero,
    ConfigError,
    ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, std::string const& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , code_{ code }
        , detail_{ message }
    {}

    ErrorCode code() const noexcept { return code_; }

    /// Message without the code prefix.
    std::string const& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}
