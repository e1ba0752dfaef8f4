#include "gnas/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gnas/error.hpp"

namespace gnas {

std::string_view to_string(RankingScheme scheme)
{
    switch (scheme)
    {
    case RankingScheme::Static: return "STATIC";
    case RankingScheme::DynamicAscending: return "DYNAMIC_ASCENDING";
    case RankingScheme::Final: return "FINAL";
    }
    return "UNKNOWN";
}

nlohmann::ordered_json to_json(CorrelationReport const& report)
{
    nlohmann::ordered_json j;
    j["scheme_a"] = report.scheme_a;
    j["scheme_b"] = report.scheme_b;
    j["rho"] = report.rho;
    j["n"] = report.n;
    auto pairs = nlohmann::ordered_json::array();
    for (auto const& [x, y] : report.pairs)
        pairs.push_back({ x, y });
    j["pairs"] = std::move(pairs);
    return j;
}

std::vector<double> average_ranks(std::span<double const> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size())
    {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]])
            ++j;
        // positions i..j-1 hold ranks i+1..j
        double const mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            ranks[order[k]] = mean_rank;
        i = j;
    }
    return ranks;
}

double spearman(std::span<double const> xs, std::span<double const> ys)
{
    if (xs.size() != ys.size())
        throw Error(ErrorCode::DegenerateInput, "length mismatch " + std::to_string(xs.size()) + " vs " +
                                                    std::to_string(ys.size()));
    if (xs.size() < 2)
        throw Error(ErrorCode::DegenerateInput, "need at least 2 observations");

    auto const rx = average_ranks(xs);
    auto const ry = average_ranks(ys);
    double const n = static_cast<double>(xs.size());
    double const mean = (n + 1.0) / 2.0; // mean of average ranks is always (n+1)/2

    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i)
    {
        double const dx = rx[i] - mean;
        double const dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw Error(ErrorCode::DegenerateInput, "constant input vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

CorrelationReport correlate(std::string_view a, std::string_view b, std::vector<double> const& xs,
                            std::vector<double> const& ys)
{
    CorrelationReport r;
    r.scheme_a = a;
    r.scheme_b = b;
    r.n = static_cast<int>(xs.size());
    r.rho = spearman(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i)
        r.pairs.emplace_back(xs[i], ys[i]);
    return r;
}

CohortEntry run(Architecture const& arch, int epochs, Evaluator& evaluator, RankingOptions const& options)
{
    auto const result = evaluator.evaluate({ arch, epochs, options.seed });
    return { arch_hash(arch), result.params, epochs, result.val_acc };
}

std::vector<double> accuracies(RankedCohort const& c)
{
    std::vector<double> v;
    for (auto const& e : c.entries)
        v.push_back(e.val_acc);
    return v;
}

std::vector<double> params_of(RankedCohort const& c)
{
    std::vector<double> v;
    for (auto const& e : c.entries)
        v.push_back(static_cast<double>(e.params));
    return v;
}

void require_cohort(std::span<Architecture const> cohort)
{
    if (cohort.size() < 2)
        throw Error(ErrorCode::DegenerateInput, "cohort needs at least 2 architectures");
}

}

StaticRankingReport static_ranking_experiment(std::span<Architecture const> cohort, int short_epochs,
                                              int full_epochs, Evaluator& evaluator,
                                              RankingOptions const& options)
{
    require_cohort(cohort);
    if (short_epochs < 1 || short_epochs >= full_epochs)
        throw Error(ErrorCode::DegenerateInput, "require 1 <= short_epochs < full_epochs");

    StaticRankingReport rep;
    rep.short_run.scheme = RankingScheme::Static;
    rep.full_run.scheme = RankingScheme::Final;
    for (auto const& arch : cohort)
    {
        rep.short_run.entries.push_back(run(arch, short_epochs, evaluator, options));
        rep.full_run.entries.push_back(run(arch, full_epochs, evaluator, options));
    }

    auto const label = "STATIC@" + std::to_string(short_epochs);
    auto const final_label = "FINAL@" + std::to_string(full_epochs);
    rep.short_vs_full = correlate(label, final_label, accuracies(rep.short_run), accuracies(rep.full_run));
    rep.params_vs_full = correlate("PARAMS", final_label, params_of(rep.full_run), accuracies(rep.full_run));
    return rep;
}

DynamicRankingReport dynamic_ranking_experiment(std::span<Architecture const> cohort, int base_epochs,
                                                int full_epochs, Evaluator& evaluator,
                                                RankingOptions const& options)
{
    require_cohort(cohort);
    if (base_epochs < 1 || full_epochs < 1)
        throw Error(ErrorCode::DegenerateInput, "epoch budgets must be >= 1");

    struct Member
    {
        Architecture const* arch;
        std::int64_t params;
        std::uint64_t hash;
    };
    std::vector<Member> members;
    members.reserve(cohort.size());
    for (auto const& arch : cohort)
    {
        // The evaluator's own count is authoritative, but ordering must be
        // known before any training happens.
        members.push_back({ &arch, count_params(arch, options.conventions), arch_hash(arch) });
    }
    std::sort(members.begin(), members.end(), [](Member const& a, Member const& b) {
        return a.params != b.params ? a.params < b.params : a.hash < b.hash;
    });

    DynamicRankingReport rep;
    rep.dynamic_run.scheme = RankingScheme::DynamicAscending;
    rep.full_run.scheme = RankingScheme::Final;
    for (std::size_t i = 0; i < members.size(); ++i)
    {
        int const epochs = base_epochs + static_cast<int>(i);
        rep.dynamic_run.entries.push_back(run(*members[i].arch, epochs, evaluator, options));
        rep.full_run.entries.push_back(run(*members[i].arch, full_epochs, evaluator, options));
    }

    auto const final_label = "FINAL@" + std::to_string(full_epochs);
    rep.dynamic_vs_full =
        correlate("DYNAMIC_ASCENDING", final_label, accuracies(rep.dynamic_run), accuracies(rep.full_run));
    rep.params_vs_dynamic =
        correlate("PARAMS", "DYNAMIC_ASCENDING", params_of(rep.dynamic_run), accuracies(rep.dynamic_run));
    return rep;
}

}
