#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gnas/eval_cache.hpp"
#include "gnas/external_evaluator.hpp"
#include "gnas/worker_server.hpp"
#include "support.hpp"

using namespace gnas;

namespace {

ExternalConfig fake(std::string const& mode, double timeout_s = 10.0)
{
    return { { FAKE_WORKER, mode }, timeout_s };
}

std::filesystem::path scratch(std::string const& name)
{
    auto dir = std::filesystem::temp_directory_path() / "gnas_tests";
    std::filesystem::create_directories(dir);
    auto p = dir / name;
    std::filesystem::remove(p);
    return p;
}

class Counting final : public Evaluator
{
public:
    EvalResult evaluate(EvalRequest const& r) override
    {
        ++calls;
        return { 40.0 + r.epochs, count_params(r.arch), 1.0 };
    }
    int calls = 0;
};

Architecture small() { return Architecture::uniform(2, 8, {}); }

}

TEST_CASE("repeated request is served from the cache")
{
    Counting inner;
    EvaluationCache cache;
    EvalRequest const req{ small(), 3, 7 };
    auto const a = evaluate(req, inner, cache);
    auto const b = evaluate(req, inner, cache);
    CHECK(inner.calls == 1);
    CHECK(a.wall_time == 1.0);
    CHECK(b.wall_time == 0.0);
    CHECK(b.val_acc == a.val_acc);
    CHECK(cache.hits() == 1);

    evaluate({ small(), 3, 8 }, inner, cache); // other seed
    evaluate({ small(), 4, 7 }, inner, cache); // other budget
    CHECK(inner.calls == 3);
    CHECK(cache.size() == 3);
}

TEST_CASE("first insert wins")
{
    EvaluationCache cache;
    CacheKey const k{ 1, 2, 3 };
    CHECK(cache.insert(k, { 50, 10, 0 }));
    CHECK_FALSE(cache.insert(k, { 60, 10, 0 }));
    CHECK(cache.find(k)->val_acc == 50);
}

TEST_CASE("file-backed cache replays on open")
{
    auto const path = scratch("cache.jsonl");
    Counting inner;
    {
        EvaluationCache cache(path);
        evaluate({ small(), 3, 0 }, inner, cache);
        evaluate({ small(), 4, 0 }, inner, cache);
    }
    EvaluationCache reopened(path);
    CHECK(reopened.size() == 2);
    auto const hit = evaluate({ small(), 4, 0 }, inner, reopened);
    CHECK(inner.calls == 2);
    CHECK(hit.val_acc == 44.0);

    std::ofstream(path, std::ios::app) << "{broken\n";
    CHECK(code_of([&] { EvaluationCache again(path); }) == ErrorCode::ParseError);
}

TEST_CASE("worker handshake and evaluation")
{
    ExternalEvaluator ev(fake("ok"));
    auto const r = ev.evaluate({ small(), 5, 0 });
    CHECK(r.val_acc == 15.0);
    CHECK(r.params == 2008);
    CHECK(ev.evaluate({ small(), 6, 0 }).val_acc == 16.0);
    CHECK(ev.last_id() == 2);
}

TEST_CASE("golden transcript")
{
    auto const log = scratch("transcript.txt");
    {
        ExternalEvaluator ev({ { FAKE_WORKER, "ok", "--log", log.string() }, 10.0 });
        ev.evaluate({ small(), 3, 7 });
        ev.evaluate({ Architecture::uniform(1, 16, { OpKind::Plain, 5 }), 95, 0 });
        ev.shutdown();
    }
    std::ifstream in(log);
    std::stringstream got;
    got << in.rdbuf();
    CHECK(got.str() ==
          "> {\"type\":\"hello\",\"protocol\":1}\n"
          "< {\"type\":\"hello\",\"protocol\":1}\n"
          "> {\"id\":1,\"type\":\"evaluate\",\"arch\":{\"depth\":2,\"stem_width\":8,\"input_resolution\":32,"
          "\"num_classes\":10,\"layers\":[{\"op\":\"sep\",\"kernel\":3},{\"op\":\"sep\",\"kernel\":3}]},"
          "\"epochs\":3,\"seed\":7}\n"
          "< {\"id\":1,\"status\":\"ok\",\"val_acc\":13.0,\"params\":2008,\"wall_time\":0.5}\n"
          "> {\"id\":2,\"type\":\"evaluate\",\"arch\":{\"depth\":1,\"stem_width\":16,\"input_resolution\":32,"
          "\"num_classes\":10,\"layers\":[{\"op\":\"conv\",\"kernel\":5}]},\"epochs\":95,\"seed\":0}\n"
          "< {\"id\":2,\"status\":\"ok\",\"val_acc\":100.0,\"params\":1016,\"wall_time\":0.5}\n"
          "> {\"type\":\"shutdown\"}\n");
}

TEST_CASE("id mismatch is a protocol error and closes the session")
{
    ExternalEvaluator ev(fake("wrong_id"));
    auto const e = caught([&] { ev.evaluate({ small(), 1, 0 }); });
    CHECK(e.code() == ErrorCode::ProtocolError);
    CHECK(std::string(e.what()).find("\"id\":2") != std::string::npos);
    CHECK(code_of([&] { ev.evaluate({ small(), 1, 0 }); }) == ErrorCode::WorkerDied);
}

TEST_CASE("worker error is passed through and the session continues")
{
    ExternalEvaluator ev(fake("error"));
    auto const e = caught([&] { ev.evaluate({ small(), 1, 0 }); });
    CHECK(e.code() == ErrorCode::EvalFailed);
    CHECK(e.detail() == "CUDA out of memory");
    CHECK(code_of([&] { ev.evaluate({ small(), 1, 0 }); }) == ErrorCode::EvalFailed);
    CHECK(ev.last_id() == 2);
}

TEST_CASE("malformed response surfaces as EVAL_FAILED with the raw line")
{
    ExternalEvaluator ev(fake("malformed"));
    EvaluationCache cache;
    auto const e = caught([&] { evaluate({ small(), 1, 0 }, ev, cache); });
    CHECK(e.code() == ErrorCode::EvalFailed);
    CHECK(std::string(e.what()).find("this is not json") != std::string::npos);
    CHECK(cache.size() == 0);
}

TEST_CASE("hung worker times out")
{
    ExternalEvaluator ev(fake("hang", 0.3));
    auto const t0 = std::chrono::steady_clock::now();
    EvaluationCache cache;
    CHECK(code_of([&] { evaluate({ small(), 1, 0 }, ev, cache); }) == ErrorCode::Timeout);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
}

TEST_CASE("dead worker")
{
    ExternalEvaluator ev(fake("die"));
    CHECK(code_of([&] { ev.evaluate({ small(), 1, 0 }); }) == ErrorCode::WorkerDied);

    ExternalEvaluator ev2(fake("die"));
    EvaluationCache cache;
    CHECK(code_of([&] { evaluate({ small(), 1, 0 }, ev2, cache); }) == ErrorCode::EvalFailed);
}

TEST_CASE("bad handshake and missing binary")
{
    CHECK(code_of([] { ExternalEvaluator ev(fake("bad_hello")); }) == ErrorCode::ProtocolError);
    CHECK(code_of([] { ExternalEvaluator ev({ { "/nonexistent/worker" }, 1.0 }); }) == ErrorCode::WorkerDied);
}

TEST_CASE("response parsing")
{
    CHECK(wire::parse_response(R"({"id":7,"status":"ok","val_acc":91.5,"params":12})", 7).val_acc == 91.5);
    CHECK(code_of([] { wire::parse_response(R"({"id":8,"status":"ok","val_acc":1,"params":1})", 7); }) ==
          ErrorCode::ProtocolError);
    auto const oom = caught([] { wire::parse_response(R"({"id":7,"status":"error","message":"OOM"})", 7); });
    CHECK(oom.code() == ErrorCode::EvalFailed);
    CHECK(oom.detail() == "OOM");
    CHECK(code_of([] { wire::parse_response(R"({"id":7,"status":"ok","val_acc":101,"params":1})", 7); }) ==
          ErrorCode::ProtocolError);
    CHECK(code_of([] { wire::parse_response(R"({"id":7,"status":"ok"})", 7); }) == ErrorCode::ProtocolError);
    CHECK(code_of([] { wire::parse_response(R"({"id":7,"status":"maybe"})", 7); }) == ErrorCode::ProtocolError);
    CHECK(code_of([] { wire::check_hello(R"({"type":"hello","protocol":2})"); }) == ErrorCode::ProtocolError);
}

TEST_CASE("in-process worker server")
{
    Counting inner;
    std::istringstream in(R"({"type":"hello","protocol":1}
{"id":1,"type":"evaluate","arch":{"depth":1,"stem_width":16,"input_resolution":32,"num_classes":10,"layers":[{"op":"conv","kernel":3}]},"epochs":2,"seed":0}
not json
{"id":3,"type":"evaluate","arch":{"depth":0},"epochs":2,"seed":0}
{"type":"shutdown"}
)");
    std::ostringstream out;
    CHECK(serve_worker(in, out, inner) == 0);

    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK_NOTHROW(wire::check_hello(line));
    std::getline(lines, line);
    auto const r = wire::parse_response(line, 1);
    CHECK(r.val_acc == 42.0);
    CHECK(r.params == 634);
    std::getline(lines, line);
    CHECK(line.find("\"status\":\"error\"") != std::string::npos);
    std::getline(lines, line);
    CHECK(code_of([&] { wire::parse_response(line, 3); }) == ErrorCode::EvalFailed);

    std::istringstream bad(R"({"type":"evaluate"})");
    std::ostringstream ignored;
    CHECK(serve_worker(bad, ignored, inner) == 1);
}
