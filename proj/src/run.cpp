#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "gnas/cli.hpp"
#include "gnas/error.hpp"
#include "gnas/eval_cache.hpp"
#include "gnas/ranking.hpp"

namespace gnas {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void write_file(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << text;
}

void write_json(std::filesystem::path const& path, ordered_json const& j)
{
    write_file(path, j.dump(2) + "\n");
}

std::string scientific(BigInt const& n)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", n.convert_to<double>());
    return buf;
}

ordered_json events_json(std::vector<TraceEvent> const& events)
{
    auto arr = ordered_json::array();
    for (auto const& e : events)
        arr.push_back(to_json(e));
    return arr;
}

std::vector<Architecture> sample_cohort(SearchConfig const& config, int size)
{
    std::vector<Architecture> cohort;
    for (int i = 0; i < size; ++i)
        cohort.push_back(sample_random(config.bounds, config.seed + static_cast<std::uint64_t>(i)));
    return cohort;
}

ordered_json run_search_experiment(RunConfig const& cfg, Evaluator& evaluator)
{
    auto const result = run_search(cfg.search, evaluator);
    auto const& t = result.trace;
    auto const conventions = cfg.search.bounds.conventions();

    ordered_json s;
    s["experiment"] = "search";
    s["d_prime"] = t.d_prime;
    s["w_prime"] = t.w_prime;
    s["micro_evals"] = t.micro_evals;
    s["d_f"] = t.d_f;
    s["total_evaluations"] = t.total_evaluations();
    s["total_epochs"] = t.total_epochs();
    s["grow_strikes"] = t.grow_strikes;
    s["prune_strikes"] = t.prune_strikes;
    s["macro_arch"] = to_json(result.macro_arch);
    s["final_arch"] = to_json(result.final_arch);
    s["final_depth"] = result.final_arch.depth;
    s["final_width"] = result.final_arch.stem_width;
    s["macro_acc"] = result.macro_acc;
    s["baseline_acc"] = result.baseline_acc;
    s["final_acc"] = result.final_acc;
    s["final_params"] = count_params(result.final_arch, conventions);

    std::vector<TraceEvent> events = t.events;
    if (cfg.ablation.random_samples > 0)
    {
        int const fe = cfg.ablation.final_epochs;
        auto const searched = evaluator.evaluate({ result.final_arch, fe, cfg.search.seed });
        auto const rb = random_baseline(cfg.search, cfg.ablation.random_samples, fe, evaluator);
        ordered_json ri;
        ri["final_epochs"] = fe;
        ri["searched_acc"] = searched.val_acc;
        ri["random_samples"] = cfg.ablation.random_samples;
        ri["random_mean_acc"] = rb.mean_acc;
        ri["random_std_acc"] = rb.std_acc;
        ri["random_mean_params"] = rb.mean_params;
        ri["random_std_params"] = rb.std_params;
        ri["ri"] = relative_improvement(searched.val_acc, rb.mean_acc);
        s["ablation"] = ri;
        events.insert(events.end(), rb.events.begin(), rb.events.end());
    }
    s["events"] = events_json(events);
    return s;
}

ordered_json run_random_experiment(RunConfig const& cfg, Evaluator& evaluator)
{
    auto const rb = random_baseline(cfg.search, cfg.random.n, cfg.random.train_epochs, evaluator);
    ordered_json s;
    s["experiment"] = "random_baseline";
    s["n"] = cfg.random.n;
    s["train_epochs"] = cfg.random.train_epochs;
    s["mean_acc"] = rb.mean_acc;
    s["std_acc"] = rb.std_acc;
    s["mean_params"] = rb.mean_params;
    s["std_params"] = rb.std_params;
    s["events"] = events_json(rb.events);
    return s;
}

ordered_json run_rank_experiment(RunConfig const& cfg, Evaluator& evaluator, std::filesystem::path const& dir)
{
    auto const cohort = sample_cohort(cfg.search, cfg.rank.cohort_size);
    RankingOptions const options{ cfg.search.seed, cfg.search.bounds.conventions() };
    auto const st =
        static_ranking_experiment(cohort, cfg.rank.short_epochs, cfg.rank.full_epochs, evaluator, options);
    auto const dy =
        dynamic_ranking_experiment(cohort, cfg.rank.base_epochs, cfg.rank.full_epochs, evaluator, options);

    write_json(dir / "rank_static.json", to_json(st.short_vs_full));
    write_json(dir / "rank_static_params.json", to_json(st.params_vs_full));
    write_json(dir / "rank_dynamic.json", to_json(dy.dynamic_vs_full));
    write_json(dir / "rank_dynamic_params.json", to_json(dy.params_vs_dynamic));

    auto brief = [](CorrelationReport const& r) {
        return ordered_json{ { "scheme_a", r.scheme_a }, { "scheme_b", r.scheme_b }, { "rho", r.rho }, { "n", r.n } };
    };
    ordered_json s;
    s["experiment"] = "rank_experiment";
    s["cohort_size"] = cfg.rank.cohort_size;
    s["static_vs_final"] = brief(st.short_vs_full);
    s["params_vs_final"] = brief(st.params_vs_full);
    s["dynamic_vs_final"] = brief(dy.dynamic_vs_full);
    s["params_vs_dynamic"] = brief(dy.params_vs_dynamic);
    return s;
}

ordered_json run_space_size(RunConfig const& cfg)
{
    auto const n = space_size(cfg.search.bounds, cfg.space_d_f);
    ordered_json s;
    s["experiment"] = "space_size";
    s["ops"] = cfg.search.bounds.ops.size();
    s["kernels"] = cfg.search.bounds.kernels.size();
    s["depth_range"] = cfg.search.bounds.depth_range();
    s["width_grid"] = cfg.search.bounds.width_grid_size();
    s["d_f"] = cfg.space_d_f;
    s["exact"] = n.str();
    s["approx"] = scientific(n);
    return s;
}

ordered_json run_eval_one(RunConfig const& cfg, Evaluator& evaluator)
{
    auto const& arch = *cfg.eval_one.arch;
    auto const r = evaluator.evaluate({ arch, cfg.eval_one.epochs, cfg.search.seed });
    ordered_json s;
    s["experiment"] = "eval_one";
    s["arch"] = to_json(arch);
    s["hash"] = arch_hash(arch);
    s["epochs"] = cfg.eval_one.epochs;
    s["val_acc"] = r.val_acc;
    s["params"] = r.params;
    return s;
}

std::unique_ptr<Evaluator> make_evaluator(RunConfig const& cfg)
{
    if (auto const* sc = std::get_if<SurrogateConfig>(&cfg.evaluator))
        return std::make_unique<SurrogateEvaluator>(*sc);
    return std::make_unique<ExternalEvaluator>(std::get<ExternalConfig>(cfg.evaluator));
}

bool is_evaluator_failure(ErrorCode code)
{
    return code == ErrorCode::EvalFailed || code == ErrorCode::Timeout || code == ErrorCode::ProtocolError ||
           code == ErrorCode::WorkerDied;
}

}

std::string format_params_millions(std::int64_t params)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(params) / 1e6);
    return buf;
}

int run(RunOptions const& options, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    ordered_json resolved;
    try
    {
        resolved = load_resolved_config(options);
        cfg = run_config_from_json(resolved);
        std::filesystem::create_directories(cfg.output_dir);
        write_json(cfg.output_dir / "config.json", resolved);
    }
    catch (Error const& e)
    {
        err << "gnas: " << e.what() << '\n';
        return 2;
    }
    catch (std::filesystem::filesystem_error const& e)
    {
        err << "gnas: CONFIG_ERROR: " << e.what() << '\n';
        return 2;
    }

    try
    {
        ordered_json summary;
        if (cfg.experiment == Experiment::SpaceSize)
        {
            summary = run_space_size(cfg);
        }
        else
        {
            std::unique_ptr<EvaluationCache> cache = cfg.cache_path.empty()
                                                         ? std::make_unique<EvaluationCache>()
                                                         : std::make_unique<EvaluationCache>(cfg.cache_path);
            auto backend = make_evaluator(cfg);
            CachingEvaluator evaluator(*backend, *cache);
            switch (cfg.experiment)
            {
            case Experiment::Search: summary = run_search_experiment(cfg, evaluator); break;
            case Experiment::RandomBaseline: summary = run_random_experiment(cfg, evaluator); break;
            case Experiment::RankExperiment: summary = run_rank_experiment(cfg, evaluator, cfg.output_dir); break;
            case Experiment::EvalOne: summary = run_eval_one(cfg, evaluator); break;
            case Experiment::SpaceSize: break;
            }
        }

        if (summary.contains("events"))
        {
            std::ostringstream trace;
            for (auto const& e : summary["events"])
                trace << e.dump() << '\n';
            write_file(cfg.output_dir / "trace.jsonl", trace.str());
        }
        write_json(cfg.output_dir / "summary.json", summary);
        auto const text = render_report(json::parse(summary.dump()));
        write_file(cfg.output_dir / "report.txt", text);
        out << text;
        return 0;
    }
    catch (Error const& e)
    {
        err << "gnas: " << e.what() << '\n';
        return is_evaluator_failure(e.code()) ? 1 : 2;
    }
}

std::string render_report(json const& summary)
{
    try
    {
        if (!summary.is_object())
            throw Error(ErrorCode::ParseError, "summary must be a JSON object");
        auto const kind = summary.at("experiment").get<std::string>();

        std::ostringstream os;
        os << std::fixed;
        int const label_width = kind == "rank_experiment" ? 30 : 20;
        auto row = [&](std::string_view label, auto const& value) {
            os << std::setw(label_width) << std::right << label << ": " << value << '\n';
        };

        auto require_events = [&] {
            auto const& ev = summary.at("events");
            if (!ev.is_array() || ev.empty())
                throw Error(ErrorCode::ParseError, "summary has an empty events list");
            for (auto const& e : ev)
                trace_event_from_json(e);
        };

        if (kind == "search")
        {
            require_events();
            int const dp = summary.at("d_prime").get<int>();
            int const wp = summary.at("w_prime").get<int>();
            int const micro = summary.at("micro_evals").get<int>();
            std::ostringstream evals;
            evals << dp << " + " << wp << " + " << micro << " + 1 = " << (dp + wp + micro + 1);

            os << "search summary\n";
            row("evaluations", evals.str());
            row("final depth", summary.at("d_f").get<int>());
            row("final width", summary.at("final_width").get<int>());
            os << std::setprecision(2);
            row("macro accuracy", summary.at("macro_acc").get<double>());
            row("baseline accuracy", summary.at("baseline_acc").get<double>());
            row("final accuracy", summary.at("final_acc").get<double>());
            row("params", format_params_millions(summary.at("final_params").get<std::int64_t>()));
            row("requested epochs", summary.at("total_epochs").get<std::int64_t>());
            if (summary.contains("ablation"))
            {
                auto const& a = summary["ablation"];
                std::ostringstream rnd;
                rnd << std::fixed << std::setprecision(2) << a.at("random_mean_acc").get<double>() << " +- "
                    << a.at("random_std_acc").get<double>() << " (n=" << a.at("random_samples").get<int>() << ")";
                row("searched @ final", a.at("searched_acc").get<double>());
                row("random @ final", rnd.str());
                row("RI", a.at("ri").get<double>());
            }
        }
        else if (kind == "random_baseline")
        {
            require_events();
            os << "random baseline\n" << std::setprecision(2);
            row("samples", summary.at("n").get<int>());
            row("train epochs", summary.at("train_epochs").get<int>());
            row("mean accuracy", summary.at("mean_acc").get<double>());
            row("std accuracy", summary.at("std_acc").get<double>());
            row("mean params", format_params_millions(
                                   static_cast<std::int64_t>(summary.at("mean_params").get<double>() + 0.5)));
            row("std params", format_params_millions(
                                  static_cast<std::int64_t>(summary.at("std_params").get<double>() + 0.5)));
        }
        else if (kind == "rank_experiment")
        {
            os << "ranking correlations (Spearman)\n" << std::setprecision(4);
            row("cohort size", summary.at("cohort_size").get<int>());
            for (auto const* key : { "static_vs_final", "params_vs_final", "dynamic_vs_final", "params_vs_dynamic" })
            {
                auto const& r = summary.at(key);
                std::ostringstream label;
                label << r.at("scheme_a").get<std::string>() << " vs " << r.at("scheme_b").get<std::string>();
                row(label.str(), r.at("rho").get<double>());
            }
        }
        else if (kind == "space_size")
        {
            os << "search space size\n";
            row("ops x kernels", std::to_string(summary.at("ops").get<int>()) + " x " +
                                     std::to_string(summary.at("kernels").get<int>()));
            row("depth range", summary.at("depth_range").get<int>());
            row("width grid", summary.at("width_grid").get<int>());
            row("assumed d_f", summary.at("d_f").get<int>());
            row("architectures", summary.at("exact").get<std::string>());
            row("approximately", summary.at("approx").get<std::string>());
        }
        else if (kind == "eval_one")
        {
            os << "single evaluation\n";
            row("hash", summary.at("hash").get<std::uint64_t>());
            row("epochs", summary.at("epochs").get<int>());
            os << std::setprecision(2);
            row("accuracy", summary.at("val_acc").get<double>());
            row("params", summary.at("params").get<std::int64_t>());
        }
        else
        {
            throw Error(ErrorCode::ParseError, "unknown experiment '" + kind + "'");
        }
        return os.str();
    }
    catch (json::exception const& e)
    {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

int report(std::filesystem::path const& summary_path, std::ostream& out, std::ostream& err)
{
    std::ifstream in(summary_path);
    if (!in)
    {
        err << "gnas: PARSE_ERROR: cannot open summary '" << summary_path.string() << "'\n";
        return 2;
    }
    try
    {
        json summary;
        try
        {
            summary = json::parse(in);
        }
        catch (json::parse_error const& e)
        {
            throw Error(ErrorCode::ParseError, summary_path.string() + ": " + e.what());
        }
        out << render_report(summary);
        return 0;
    }
    catch (Error const& e)
    {
        err << "gnas: " << e.what() << '\n';
        return 2;
    }
}

}
