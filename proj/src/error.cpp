#include "gnas/error.hpp"

namespace gnas {

std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::InvalidArchitecture: return "INVALID_ARCHITECTURE";
    case ErrorCode::InvalidBounds: return "INVALID_BOUNDS";
    case ErrorCode::ScheduleError: return "SCHEDULE_ERROR";
    case ErrorCode::EvalFailed: return "EVAL_FAILED";
    case ErrorCode::Timeout: return "TIMEOUT";
    case ErrorCode::ProtocolError: return "PROTOCOL_ERROR";
    case ErrorCode::WorkerDied: return "WORKER_DIED";
    case ErrorCode::DegenerateInput: return "DEGENERATE_INPUT";
    case ErrorCode::DivideByZero: return "DIVIDE_BY_ZERO";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    }
    return "UNKNOWN";
}

}
