#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gnas/evaluation.hpp"

namespace gnas {

enum class RankingScheme
{
    Static,
    DynamicAscending,
    Final,
};

std::string_view to_string(RankingScheme scheme);

struct CohortEntry
{
    std::uint64_t arch_hash = 0;
    std::int64_t params = 0;
    int epochs_trained = 0;
    double val_acc = 0.0;
};

struct RankedCohort
{
    std::vector<CohortEntry> entries;
    RankingScheme scheme = RankingScheme::Static;
};

struct CorrelationReport
{
    std::string scheme_a;
    std::string scheme_b;
    double rho = 0.0;
    int n = 0;
    std::vector<std::pair<double, double>> pairs;
};

nlohmann::ordered_json to_json(CorrelationReport const& report);

/// Ranks starting at 1; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<double const> values);

/// Pearson correlation of average ranks. Throws DEGENERATE_INPUT when the
/// lengths differ, n < 2, or either vector is constant.
double spearman(std::span<double const> xs, std::span<double const> ys);

struct RankingOptions
{
    std::uint64_t seed = 0; // training seed passed with every request
    NetworkConventions conventions{}; // for ordering by params before training
};

struct StaticRankingReport
{
    RankedCohort short_run;
    RankedCohort full_run;
    CorrelationReport short_vs_full;
    CorrelationReport params_vs_full;
};

/// Every member trained at `short_epochs` and at `full_epochs`.
StaticRankingReport static_ranking_experiment(std::span<Architecture const> cohort, int short_epochs,
                                              int full_epochs, Evaluator& evaluator,
                                              RankingOptions const& options = {});

struct DynamicRankingReport
{
    RankedCohort dynamic_run; // sorted by params, epochs base, base+1, ...
    RankedCohort full_run;    // same order
    CorrelationReport dynamic_vs_full;
    CorrelationReport params_vs_dynamic;
};

/// Members sorted by (params, arch_hash) ascending; the i-th is trained for
/// base_epochs + i epochs and compared against training at `full_epochs`.
DynamicRankingReport dynamic_ranking_experiment(std::span<Architecture const> cohort, int base_epochs,
                                                int full_epochs, Evaluator& evaluator,
                                                RankingOptions const& options = {});

}
