#include "gnas/worker_server.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gnas/error.hpp"
#include "gnas/external_evaluator.hpp"

namespace gnas {

namespace {

void reply_error(std::ostream& out, nlohmann::json const& id, std::string const& message)
{
    nlohmann::ordered_json r;
    r["id"] = id;
    r["status"] = "error";
    r["message"] = message;
    out << r.dump() << '\n' << std::flush;
}

}

int serve_worker(std::istream& in, std::ostream& out, Evaluator& evaluator)
{
    std::string line;
    if (!std::getline(in, line))
        return 1;
    try
    {
        wire::check_hello(line);
    }
    catch (Error const&)
    {
        return 1;
    }
    out << wire::hello() << '\n' << std::flush;

    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        nlohmann::json req;
        try
        {
            req = nlohmann::json::parse(line);
        }
        catch (nlohmann::json::parse_error const& e)
        {
            reply_error(out, nullptr, std::string("invalid JSON: ") + e.what());
            continue;
        }
        if (req.value("type", "") == "shutdown")
            return 0;

        nlohmann::json const id = req.contains("id") ? req["id"] : nlohmann::json(nullptr);
        try
        {
            if (req.value("type", "") != "evaluate")
                throw Error(ErrorCode::ProtocolError, "unknown message type");
            EvalRequest r;
            r.arch = architecture_from_json(req.at("arch"));
            r.epochs = req.at("epochs").get<int>();
            r.seed = req.at("seed").get<std::uint64_t>();
            auto const result = evaluator.evaluate(r);

            nlohmann::ordered_json resp;
            resp["id"] = id;
            resp["status"] = "ok";
            resp["val_acc"] = result.val_acc;
            resp["params"] = result.params;
            resp["wall_time"] = result.wall_time;
            out << resp.dump() << '\n' << std::flush;
        }
        catch (std::exception const& e)
        {
            reply_error(out, id, e.what());
        }
    }
    return 0;
}

}
