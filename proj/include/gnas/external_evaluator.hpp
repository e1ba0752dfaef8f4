#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gnas/evaluation.hpp"

namespace gnas {

inline constexpr int kProtocolVersion = 1;

/// Wire messages of the newline-delimited JSON worker protocol.
namespace wire {

std::string hello();
std::string shutdown();
std::string evaluate_request(std::int64_t id, EvalRequest const& request);

/// Parses one response line for request `expected_id`. Throws PROTOCOL_ERROR
/// (carrying the raw line) on invalid JSON, a missing field or an id
/// mismatch, and EVAL_FAILED with the worker's message on status "error".
EvalResult parse_response(std::string_view line, std::int64_t expected_id);

/// Throws PROTOCOL_ERROR unless `line` is a protocol-1 hello.
void check_hello(std::string_view line);

}

/// A child process with its stdin/stdout connected to pipes.
class WorkerProcess
{
public:
    explicit WorkerProcess(std::vector<std::string> const& command);
    ~WorkerProcess();

    WorkerProcess(WorkerProcess const&) = delete;
    WorkerProcess& operator=(WorkerProcess const&) = delete;

    /// Throws WORKER_DIED if the worker's stdin is closed.
    void write_line(std::string_view line);

    /// Throws TIMEOUT past `deadline`, WORKER_DIED on end of stream.
    std::string read_line(std::chrono::steady_clock::time_point deadline);

    /// Closes stdin and waits up to `grace` before killing.
    void close(std::chrono::milliseconds grace);
    void kill();

    bool running() const { return pid_ > 0; }

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

struct ExternalConfig
{
    std::vector<std::string> command;
    double timeout_s = 3600.0;
};

/// Evaluator client for one worker session. At most one request is
/// outstanding; ids increase by one per request starting from 1. A timeout or
/// protocol violation poisons the session and kills the worker.
class ExternalEvaluator final : public Evaluator
{
public:
    explicit ExternalEvaluator(ExternalConfig config);
    ~ExternalEvaluator() override;

    EvalResult evaluate(EvalRequest const& request) override;

    /// Sends the shutdown message and reaps the worker. Idempotent.
    void shutdown();

    std::int64_t last_id() const { return next_id_ - 1; }

private:
    std::chrono::steady_clock::time_point deadline() const;

    ExternalConfig config_;
    WorkerProcess worker_;
    std::mutex mutex_;
    std::int64_t next_id_ = 1;
    bool open_ = false;
};

}
