#include "gnas/external_evaluator.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "gnas/error.hpp"

extern char** environ;

namespace gnas {

namespace wire {

std::string hello()
{
    nlohmann::ordered_json j;
    j["type"] = "hello";
    j["protocol"] = kProtocolVersion;
    return j.dump();
}

std::string shutdown()
{
    return R"({"type":"shutdown"})";
}

std::string evaluate_request(std::int64_t id, EvalRequest const& request)
{
    nlohmann::ordered_json j;
    j["id"] = id;
    j["type"] = "evaluate";
    j["arch"] = to_json(request.arch);
    j["epochs"] = request.epochs;
    j["seed"] = request.seed;
    return j.dump();
}

namespace {

[[noreturn]] void protocol_error(std::string const& why, std::string_view line)
{
    throw Error(ErrorCode::ProtocolError, why + ": " + std::string(line));
}

nlohmann::json parse_object(std::string_view line)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(line);
    }
    catch (nlohmann::json::parse_error const&)
    {
        protocol_error("invalid JSON", line);
    }
    if (!j.is_object())
        protocol_error("expected a JSON object", line);
    return j;
}

}

EvalResult parse_response(std::string_view line, std::int64_t expected_id)
{
    auto const j = parse_object(line);
    auto id = j.find("id");
    if (id == j.end() || !id->is_number_integer())
        protocol_error("missing integer id", line);
    if (id->get<std::int64_t>() != expected_id)
        protocol_error("id mismatch (expected " + std::to_string(expected_id) + ")", line);

    auto status = j.find("status");
    if (status == j.end() || !status->is_string())
        protocol_error("missing status", line);
    if (*status == "error")
    {
        auto msg = j.find("message");
        throw Error(ErrorCode::EvalFailed,
                    msg != j.end() && msg->is_string() ? msg->get<std::string>() : std::string(line));
    }
    if (*status != "ok")
        protocol_error("unknown status", line);

    auto acc = j.find("val_acc");
    auto params = j.find("params");
    if (acc == j.end() || !acc->is_number() || params == j.end() || !params->is_number_integer())
        protocol_error("ok response needs numeric val_acc and integer params", line);
    EvalResult r;
    r.val_acc = acc->get<double>();
    r.params = params->get<std::int64_t>();
    if (!(r.val_acc >= 0.0 && r.val_acc <= 100.0))
        protocol_error("val_acc outside [0, 100]", line);
    if (auto wt = j.find("wall_time"); wt != j.end() && wt->is_number())
        r.wall_time = wt->get<double>();
    return r;
}

void check_hello(std::string_view line)
{
    auto const j = parse_object(line);
    if (j.value("type", "") != "hello")
        protocol_error("expected hello", line);
    auto p = j.find("protocol");
    if (p == j.end() || !p->is_number_integer() || p->get<int>() != kProtocolVersion)
        protocol_error("unsupported protocol version", line);
}

}

WorkerProcess::WorkerProcess(std::vector<std::string> const& command)
{
    if (command.empty())
        throw Error(ErrorCode::ConfigError, "external evaluator command is empty");

    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0)
        throw Error(ErrorCode::WorkerDied, std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0)
    {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error(ErrorCode::WorkerDied, std::string("pipe: ") + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

    std::vector<char*> argv;
    for (auto const& arg : command)
        argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);

    pid_t pid = -1;
    int const rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0)
    {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        throw Error(ErrorCode::WorkerDied, "cannot start '" + command.front() + "': " + std::strerror(rc));
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

WorkerProcess::~WorkerProcess()
{
    close(std::chrono::milliseconds(2000));
}

void WorkerProcess::write_line(std::string_view line)
{
    if (to_child_ < 0)
        throw Error(ErrorCode::WorkerDied, "worker stdin is closed");
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size())
    {
        ssize_t const n = ::write(to_child_, data.data() + off, data.size() - off);
        if (n < 0)
        {
            if (errno == EINTR)
                continue;
            throw Error(ErrorCode::WorkerDied, std::string("write to worker failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string WorkerProcess::read_line(std::chrono::steady_clock::time_point deadline)
{
    using namespace std::chrono;
    for (;;)
    {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos)
        {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            return line;
        }
        if (from_child_ < 0)
            throw Error(ErrorCode::WorkerDied, "worker stdout is closed");

        auto const remaining = duration_cast<milliseconds>(deadline - steady_clock::now()).count();
        if (remaining <= 0)
            throw Error(ErrorCode::Timeout, "no response from worker before deadline");
        pollfd pfd{ from_child_, POLLIN, 0 };
        int const pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1 << 30)));
        if (pr < 0)
        {
            if (errno == EINTR)
                continue;
            throw Error(ErrorCode::WorkerDied, std::string("poll failed: ") + std::strerror(errno));
        }
        if (pr == 0)
            continue;

        char chunk[4096];
        ssize_t const n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0)
        {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw Error(ErrorCode::WorkerDied, std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0)
            throw Error(ErrorCode::WorkerDied, "worker closed its output stream");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void WorkerProcess::close(std::chrono::milliseconds grace)
{
    if (to_child_ >= 0)
    {
        ::close(to_child_);
        to_child_ = -1;
    }
    if (pid_ > 0)
    {
        auto const until = std::chrono::steady_clock::now() + grace;
        int status = 0;
        while (::waitpid(pid_, &status, WNOHANG) == 0)
        {
            if (std::chrono::steady_clock::now() >= until)
            {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        pid_ = -1;
    }
    if (from_child_ >= 0)
    {
        ::close(from_child_);
        from_child_ = -1;
    }
}

void WorkerProcess::kill()
{
    if (pid_ > 0)
        ::kill(pid_, SIGKILL);
    close(std::chrono::milliseconds(1000));
}

ExternalEvaluator::ExternalEvaluator(ExternalConfig config)
    : config_{ std::move(config) }
    , worker_{ config_.command }
{
    if (!(config_.timeout_s > 0))
        throw Error(ErrorCode::ConfigError, "external timeout_s must be > 0");
    try
    {
        worker_.write_line(wire::hello());
        wire::check_hello(worker_.read_line(deadline()));
    }
    catch (...)
    {
        worker_.kill();
        throw;
    }
    open_ = true;
}

ExternalEvaluator::~ExternalEvaluator()
{
    try
    {
        shutdown();
    }
    catch (...)
    {
    }
}

std::chrono::steady_clock::time_point ExternalEvaluator::deadline() const
{
    return std::chrono::steady_clock::now() +
           std::chrono::duration_cast<std::chrono::steady_clock::duration>(
               std::chrono::duration<double>(config_.timeout_s));
}

EvalResult ExternalEvaluator::evaluate(EvalRequest const& request)
{
    validate(request);
    std::lock_guard lock(mutex_);
    if (!open_)
        throw Error(ErrorCode::WorkerDied, "worker session is closed");

    std::int64_t const id = next_id_++;
    try
    {
        worker_.write_line(wire::evaluate_request(id, request));
        return wire::parse_response(worker_.read_line(deadline()), id);
    }
    catch (Error const& e)
    {
        if (e.code() != ErrorCode::EvalFailed)
        {
            open_ = false;
            worker_.kill();
        }
        throw;
    }
}

void ExternalEvaluator::shutdown()
{
    std::lock_guard lock(mutex_);
    if (open_)
    {
        open_ = false;
        try
        {
            worker_.write_line(wire::shutdown());
        }
        catch (Error const&)
        {
        }
    }
    worker_.close(std::chrono::milliseconds(5000));
}

}
