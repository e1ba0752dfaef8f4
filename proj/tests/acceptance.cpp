// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gnas/cli.hpp"
#include "gnas/ranking.hpp"
#include "gnas/search.hpp"
#include "oracles.hpp"

using namespace gnas;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and limits.
constexpr double kSpaceSizeMaxMs = 1.0;
constexpr double kSpearmanTol = 1e-12;
constexpr double kSpearmanMaxS = 5.0;
constexpr int kRankSeeds = 20;
constexpr int kRankMinWins = 16;
constexpr int kRankCohort = 50;
constexpr double kRankMaxS = 60.0;
constexpr int kBudgetSearches = 10;
constexpr double kBudgetMaxS = 120.0;
constexpr int kTerminationSearches = 100;
constexpr int kMaxStrikes = 3;
constexpr int kRiSeeds = 5;
constexpr int kRiRandomSamples = 10;
constexpr int kRiFinalEpochs = 50;
constexpr double kRiMaxS = 180.0;

int failures = 0;

void report(bool pass, std::string const& name, std::string const& detail)
{
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

void info(std::string const& name, std::string const& detail)
{
    std::printf("INFO  %-28s %s\n", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(char const* f, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SearchBounds desk_bounds()
{
    SearchBounds b;
    b.d_min = 5;
    b.d_max = 12;
    b.w_min = 8;
    b.w_max = 16;
    return b;
}

void space_size_check()
{
    SearchBounds b;
    b.d_min = 5;
    b.d_max = 100;
    b.w_min = 16;
    b.w_max = 128;
    b.w_res = 2;
    auto const t0 = Clock::now();
    auto const n = space_size(b, 25);
    double const ms = seconds_since(t0) * 1e3;
    std::string const exact = n.str();
    std::string const want = oracle::space_size(4, 25, 96, 57);
    bool const leading = exact.size() == 19 && exact.substr(0, 3) == "616";
    report(exact == want && leading && ms < kSpaceSizeMaxMs, "exact space size",
           fmt("%s, oracle %s, %.3f ms", exact.c_str(), want.c_str(), ms));
}

void spearman_check()
{
    std::mt19937_64 rng(7);
    auto const t0 = Clock::now();
    double worst = 0;
    int done = 0;
    while (done < 1000)
    {
        std::size_t const n = 2 + rng() % 49;
        int const levels = 2 + static_cast<int>(rng() % 15);
        std::vector<double> x(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            x[i] = static_cast<double>(rng() % static_cast<unsigned>(levels));
            y[i] = static_cast<double>(rng() % static_cast<unsigned>(levels));
        }
        auto flat = [](std::vector<double> const& v) {
            return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
        };
        if (flat(x) || flat(y))
            continue;
        worst = std::max(worst, std::abs(spearman(x, y) - oracle::spearman(x, y)));
        ++done;
    }
    double const s = seconds_since(t0);
    report(worst <= kSpearmanTol && s < kSpearmanMaxS, "spearman oracle",
           fmt("max |diff| %.2e over 1000 vectors, %.2f s", worst, s));
}

int ranking_wins(SearchBounds const& bounds, double* mean_static, double* mean_dynamic)
{
    int wins = 0;
    double ss = 0;
    double sd = 0;
    for (int seed = 0; seed < kRankSeeds; ++seed)
    {
        SurrogateConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        SurrogateEvaluator ev(cfg);
        std::vector<Architecture> cohort;
        for (int i = 0; i < kRankCohort; ++i)
            cohort.push_back(sample_random(bounds, static_cast<std::uint64_t>(seed * 1000 + i)));
        RankingOptions const opt{ cfg.seed, bounds.conventions() };
        auto const st = static_ranking_experiment(cohort, 1, 50, ev, opt);
        auto const dy = dynamic_ranking_experiment(cohort, 1, 50, ev, opt);
        wins += dy.dynamic_vs_full.rho > st.short_vs_full.rho;
        ss += st.short_vs_full.rho;
        sd += dy.dynamic_vs_full.rho;
    }
    *mean_static = ss / kRankSeeds;
    *mean_dynamic = sd / kRankSeeds;
    return wins;
}

void ranking_check()
{
    auto const t0 = Clock::now();
    double ms = 0;
    double md = 0;
    int const wins = ranking_wins(desk_bounds(), &ms, &md);
    double const s = seconds_since(t0);
    report(wins >= kRankMinWins && s < kRankMaxS, "dynamic beats static ranking",
           fmt("%d/%d seeds, mean rho static %.3f dynamic %.3f (d 5..12, w 8..16), %.1f s", wins, kRankSeeds, ms,
               md, s));

    int const wide = ranking_wins(SearchBounds{}, &ms, &md);
    info("ranking, d 10..100 w 16..64", fmt("%d/%d seeds, mean rho static %.3f dynamic %.3f", wide, kRankSeeds, ms, md));
}

void budget_check()
{
    auto const t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (int seed = 0; seed < kBudgetSearches; ++seed)
    {
        SurrogateConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        SurrogateEvaluator ev(cfg);
        SearchConfig sc;
        sc.seed = cfg.seed;
        auto const t = run_search(sc, ev).trace;
        bool const good =
            t.micro_evals == 2 * t.d_f && t.total_evaluations() == t.d_prime + t.w_prime + 2 * t.d_f + 1;
        if (!good)
            detail += fmt(" seed %d: %d != %d+%d+2*%d+1;", seed, t.total_evaluations(), t.d_prime, t.w_prime, t.d_f);
        ok = ok && good;
    }
    double const s = seconds_since(t0);
    report(ok && s < kBudgetMaxS, "budget identity",
           fmt("%d searches, %.2f s", kBudgetSearches, s) + detail);
}

void termination_check()
{
    int max_depth = 0;
    int min_width = 1 << 30;
    int max_gs = 0;
    int max_ps = 0;
    SearchConfig sc;
    for (int seed = 0; seed < kTerminationSearches; ++seed)
    {
        SurrogateConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        SurrogateEvaluator ev(cfg);
        sc.seed = cfg.seed;
        auto const r = run_search(sc, ev);
        for (auto const& e : r.trace.events)
        {
            max_depth = std::max(max_depth, e.depth);
            min_width = std::min(min_width, e.stem_width);
        }
        max_gs = std::max(max_gs, r.trace.grow_strikes);
        max_ps = std::max(max_ps, r.trace.prune_strikes);
    }
    bool const ok = max_depth <= sc.bounds.d_max && min_width >= sc.bounds.w_min && max_gs <= kMaxStrikes &&
         max_ps <= kMaxStrikes;
    report(ok, "termination bounds",
           fmt("%d searches: max depth %d (<= %d), min width %d (>= %d), strikes grow %d prune %d (<= %d)",
               kTerminationSearches, max_depth, sc.bounds.d_max, min_width, sc.bounds.w_min, max_gs, max_ps,
               kMaxStrikes));
}

void compensation_check()
{
    int accepted = 0;
    int violations = 0;
    for (double slack : { 0.0, 0.02 })
        for (int seed = 0; seed < 10; ++seed)
        {
            SurrogateConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(seed);
            SurrogateEvaluator ev(cfg);
            SearchConfig sc;
            sc.seed = cfg.seed;
            sc.param_slack = slack;
            auto const r = run_search(sc, ev);
            double const limit =
                static_cast<double>(count_params(r.macro_arch, sc.bounds.conventions())) * (1.0 + slack);
            for (auto const& e : r.trace.events)
            {
                bool const micro = e.phase == Phase::MicroOp || e.phase == Phase::MicroKernel;
                if (micro && e.accepted)
                {
                    ++accepted;
                    violations += static_cast<double>(e.params) > limit;
                }
            }
        }

    // params-only landscape: accuracy is a function of size alone, noise off
    int unchanged = 0;
    int runs = 0;
    for (int seed = 0; seed < 10; ++seed)
    {
        SurrogateConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.sigma = 0;
        cfg.a_d = 0;
        cfg.p_tau = 1e18;
        SurrogateEvaluator ev(cfg);
        SearchConfig sc;
        sc.seed = cfg.seed;
        auto const r = run_search(sc, ev);
        ++runs;
        unchanged += r.final_arch == r.macro_arch;
    }
    report(violations == 0 && unchanged == runs, "micro compensation",
           fmt("%d accepted micro candidates, %d over bound; params-only: %d/%d unchanged", accepted, violations,
               unchanged, runs));
}

fs::path scratch(std::string const& name)
{
    auto dir = fs::temp_directory_path() / "gnas_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_quiet(RunOptions const& o)
{
    std::ostringstream out;
    std::ostringstream err;
    int const code = run(o, out, err);
    if (code != 0)
        std::fprintf(stderr, "%s", err.str().c_str());
    return code;
}

void ri_check()
{
    auto const dir = scratch("ri");
    auto const cfg_path = dir / "config.json";
    std::ofstream(cfg_path) << nlohmann::json{
        { "experiment", "search" },
        { "ablation", { { "random_samples", kRiRandomSamples }, { "final_epochs", kRiFinalEpochs } } }
    }.dump();

    auto const t0 = Clock::now();
    int positive = 0;
    std::string values;
    for (int seed = 0; seed < kRiSeeds; ++seed)
    {
        RunOptions o;
        o.config_path = cfg_path;
        o.seed = static_cast<std::uint64_t>(seed);
        o.out_dir = dir / std::to_string(seed);
        if (run_quiet(o) != 0)
        {
            values += " error";
            continue;
        }
        auto const s = nlohmann::json::parse(slurp(*o.out_dir / "summary.json"));
        double const ri = s["ablation"]["ri"].get<double>();
        positive += ri > 0;
        values += fmt(" %.2f", ri);
    }
    double const s = seconds_since(t0);
    report(positive == kRiSeeds && s < kRiMaxS, "RI over random sampling",
           fmt("%d/%d seeds positive, RI:%s, %.1f s", positive, kRiSeeds, values.c_str(), s));
}

void determinism_check()
{
    auto const dir = scratch("determinism");
    auto const cfg_path = dir / "config.json";
    std::ofstream(cfg_path) << R"({"experiment":"search","search":{"seed":42}})";
    RunOptions a;
    a.config_path = cfg_path;
    a.out_dir = dir / "a";
    RunOptions b = a;
    b.out_dir = dir / "b";
    bool const ran = run_quiet(a) == 0 && run_quiet(b) == 0;
    auto const ta = slurp(dir / "a" / "trace.jsonl");
    auto const tb = slurp(dir / "b" / "trace.jsonl");
    report(ran && !ta.empty() && ta == tb, "byte-identical trace",
           fmt("%zu bytes vs %zu bytes", ta.size(), tb.size()));
}

}

int main()
{
    space_size_check();
    spearman_check();
    ranking_check();
    budget_check();
    termination_check();
    compensation_check();
    ri_check();
    determinism_check();
    std::printf("%d failed\n", failures);
    return failures;
}
