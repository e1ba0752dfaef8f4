// Scripted worker for protocol tests.
//   fake_worker MODE [--log FILE]
// ok         val_acc = min(100, 10 + epochs), params = 1000 * depth + stem_width
// wrong_id   answers with id + 1
// error      status "error" for every request
// malformed  a non-JSON line
// hang       never answers
// die        exits on the first request
// bad_hello  answers the hello with protocol 99
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

int main(int argc, char** argv)
{
    if (argc < 2)
        return 2;
    std::string const mode = argv[1];
    std::ofstream log;
    if (argc == 4 && std::strcmp(argv[2], "--log") == 0)
        log.open(argv[3]);

    auto send = [&](std::string const& line) {
        std::cout << line << '\n' << std::flush;
        if (log)
            log << "< " << line << '\n' << std::flush;
    };

    std::string line;
    if (!std::getline(std::cin, line))
        return 1;
    if (log)
        log << "> " << line << '\n' << std::flush;
    send(mode == "bad_hello" ? R"({"type":"hello","protocol":99})" : R"({"type":"hello","protocol":1})");

    while (std::getline(std::cin, line))
    {
        if (log)
            log << "> " << line << '\n' << std::flush;
        auto const req = nlohmann::json::parse(line);
        if (req.value("type", "") == "shutdown")
            return 0;
        auto const id = req.at("id").get<long long>();

        if (mode == "die")
            return 3;
        if (mode == "hang")
        {
            std::this_thread::sleep_for(std::chrono::hours(1));
            return 0;
        }
        if (mode == "malformed")
        {
            send("this is not json");
            continue;
        }
        nlohmann::ordered_json r;
        r["id"] = mode == "wrong_id" ? id + 1 : id;
        if (mode == "error")
        {
            r["status"] = "error";
            r["message"] = "CUDA out of memory";
        }
        else
        {
            auto const& a = req.at("arch");
            int const epochs = req.at("epochs").get<int>();
            r["status"] = "ok";
            r["val_acc"] = epochs + 10 > 100 ? 100.0 : 10.0 + epochs;
            r["params"] = 1000 * a.at("depth").get<long long>() + a.at("stem_width").get<long long>();
            r["wall_time"] = 0.5;
        }
        send(r.dump());
    }
    return 0;
}
