#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "gnas/cli.hpp"
#include "gnas/error.hpp"
#include "gnas/worker_server.hpp"

int main(int argc, char** argv)
{
    std::signal(SIGPIPE, SIG_IGN);

    CLI::App app{ "Global macro-micro architecture search" };
    app.require_subcommand(1);

    gnas::RunOptions run_options;
    std::uint64_t seed = 0;
    std::string out_dir;
    auto* run_cmd = app.add_subcommand("run", "run the experiment named in a config file");
    run_cmd->add_option("--config", run_options.config_path, "JSON config file")->required();
    run_cmd->add_option("--set", run_options.overrides, "KEY=VALUE override (dotted key), repeatable");
    auto* seed_opt = run_cmd->add_option("--seed", seed, "search and surrogate seed");
    auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory");

    std::string summary_path;
    auto* report_cmd = app.add_subcommand("report", "render summary.json as text");
    report_cmd->add_option("summary", summary_path, "path to summary.json")->required();

    gnas::SurrogateConfig surrogate;
    auto* serve_cmd =
        app.add_subcommand("serve-surrogate", "answer evaluation requests on stdin/stdout with the surrogate");
    serve_cmd->add_option("--seed", surrogate.seed, "surrogate noise seed");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*run_cmd)
    {
        if (*seed_opt)
            run_options.seed = seed;
        if (*out_opt)
            run_options.out_dir = out_dir;
        return gnas::run(run_options, std::cout, std::cerr);
    }
    if (*report_cmd)
        return gnas::report(summary_path, std::cout, std::cerr);

    gnas::SurrogateEvaluator evaluator(surrogate);
    return gnas::serve_worker(std::cin, std::cout, evaluator);
}
