#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gnas/architecture.hpp"
#include "gnas/evaluation.hpp"

namespace gnas {

struct SearchConfig
{
    SearchBounds bounds{};
    double l_plus = 0.10;  // percentage points a new layer must add to be accepted
    double l_minus = 0.05; // drop tolerated without a strike
    int max_strikes = 3;
    OpKind init_op = OpKind::Separable;
    int init_kernel = 3;
    std::uint64_t seed = 0;
    double param_slack = 0.0;
    int micro_epochs = 0; // training budget for micro candidates; 0 means bounds.e_min
};

/// Throws INVALID_BOUNDS / CONFIG_ERROR.
void validate(SearchConfig const& config);

enum class Phase
{
    Grow,
    Prune,
    MicroBaseline,
    MicroOp,
    MicroKernel,
    Random,
};

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view token);

struct TraceEvent
{
    Phase phase = Phase::Grow;
    std::uint64_t hash = 0;
    int depth = 0;
    int stem_width = 0;
    int epochs = 0;
    double val_acc = 0.0;
    std::int64_t params = 0;
    bool accepted = false;
    bool compensation_failed = false; // micro only: width hit w_min above the params bound

    bool operator==(TraceEvent const&) const = default;
};

struct SearchTrace
{
    std::vector<TraceEvent> events;
    int d_prime = 0; // GROW evaluations, the initial architecture included
    int w_prime = 0; // PRUNE evaluations
    int micro_evals = 0;
    int d_f = 0;
    int grow_strikes = 0;
    int prune_strikes = 0;

    int total_evaluations() const { return static_cast<int>(events.size()); }
    std::int64_t total_epochs() const;
};

nlohmann::ordered_json to_json(TraceEvent const& event);
TraceEvent trace_event_from_json(nlohmann::json const& j);

/// One compact JSON object per line.
void write_trace_jsonl(std::ostream& out, std::vector<TraceEvent> const& events);

struct MacroResult
{
    Architecture arch;
    double acc = 0.0;
    int last_epochs = 0; // budget E reached at the end of the prune phase
    SearchTrace trace;
};

/// Grow from (d_min, w_max) one layer at a time at E+1 epochs per step, then
/// prune the stem width of the best grown network by w_res at E+2 per step.
MacroResult macro_search(SearchConfig const& config, Evaluator& evaluator);

/// Narrows the stem one channel at a time until the network has at most
/// baseline_params * (1 + slack) parameters or the stem reaches w_min.
Architecture compensate_width(Architecture const& arch, std::int64_t baseline_params, double slack, int w_min,
                              NetworkConventions conventions = {});

struct MicroResult
{
    Architecture arch;
    double baseline_acc = 0.0;
    double acc = 0.0;
    std::int64_t baseline_params = 0;
    SearchTrace trace;
};

/// Retrains `macro_arch` for `epochs` as a baseline, then tries the alternate
/// operation on every layer in order, then the alternate kernel on every
/// layer, each width-compensated and kept only if accuracy strictly improves.
MicroResult micro_search(Architecture const& macro_arch, int epochs, SearchConfig const& config,
                         Evaluator& evaluator);

struct SearchResult
{
    Architecture macro_arch;
    Architecture final_arch;
    double macro_acc = 0.0;
    double baseline_acc = 0.0; // macro architecture retrained at the micro budget
    double final_acc = 0.0;
    SearchTrace trace;
};

SearchResult run_search(SearchConfig const& config, Evaluator& evaluator);

/// 100 * (acc_method - acc_random_mean) / acc_random_mean. Throws
/// DIVIDE_BY_ZERO unless acc_random_mean > 0.
double relative_improvement(double acc_method, double acc_random_mean);

struct RandomBaseline
{
    double mean_acc = 0.0;
    double std_acc = 0.0; // sample std (n - 1); 0 when n == 1
    double mean_params = 0.0;
    double std_params = 0.0;
    std::vector<Architecture> archs;
    std::vector<TraceEvent> events;
};

/// Samples n architectures with seeds config.seed + i and trains each for
/// train_epochs.
RandomBaseline random_baseline(SearchConfig const& config, int n, int train_epochs, Evaluator& evaluator);

}
