#include "gnas/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gnas/error.hpp"

namespace gnas {

namespace {

bool in_set(std::vector<OpKind> const& ops, OpKind op)
{
    return std::find(ops.begin(), ops.end(), op) != ops.end();
}

bool in_set(std::vector<int> const& kernels, int k)
{
    return std::find(kernels.begin(), kernels.end(), k) != kernels.end();
}

class Recorder
{
public:
    Recorder(Evaluator& evaluator, SearchConfig const& config, SearchTrace& trace)
        : evaluator_{ evaluator }
        , config_{ config }
        , trace_{ trace }
    {}

    TraceEvent& run(Phase phase, Architecture const& arch, int epochs)
    {
        auto const result = evaluator_.evaluate({ arch, epochs, config_.seed });
        TraceEvent ev;
        ev.phase = phase;
        ev.hash = arch_hash(arch);
        ev.depth = arch.depth;
        ev.stem_width = arch.stem_width;
        ev.epochs = epochs;
        ev.val_acc = result.val_acc;
        ev.params = result.params;
        trace_.events.push_back(ev);
        return trace_.events.back();
    }

private:
    Evaluator& evaluator_;
    SearchConfig const& config_;
    SearchTrace& trace_;
};

template <class T>
T alternative(std::vector<T> const& choices, T current)
{
    for (auto const& c : choices)
        if (c != current)
            return c;
    return current;
}

}

void validate(SearchConfig const& c)
{
    validate(c.bounds);
    auto fail = [](std::string const& what) { throw Error(ErrorCode::ConfigError, "search: " + what); };
    if (!(c.l_plus > 0))
        fail("l_plus must be > 0");
    if (!(c.l_minus >= 0))
        fail("l_minus must be >= 0");
    if (c.max_strikes < 1)
        fail("max_strikes must be >= 1");
    if (!(c.param_slack >= 0))
        fail("param_slack must be >= 0");
    if (c.micro_epochs < 0)
        fail("micro_epochs must be >= 0");
    if (!in_set(c.bounds.ops, c.init_op))
        throw Error(ErrorCode::InvalidBounds, "init_op is not in bounds.ops");
    if (!in_set(c.bounds.kernels, c.init_kernel))
        throw Error(ErrorCode::InvalidBounds, "init_kernel is not in bounds.kernels");
}

std::string_view to_string(Phase phase)
{
    switch (phase)
    {
    case Phase::Grow: return "GROW";
    case Phase::Prune: return "PRUNE";
    case Phase::MicroBaseline: return "MICRO_BASELINE";
    case Phase::MicroOp: return "MICRO_OP";
    case Phase::MicroKernel: return "MICRO_KERNEL";
    case Phase::Random: return "RANDOM";
    }
    return "UNKNOWN";
}

std::optional<Phase> parse_phase(std::string_view token)
{
    for (auto p : { Phase::Grow, Phase::Prune, Phase::MicroBaseline, Phase::MicroOp, Phase::MicroKernel,
                    Phase::Random })
        if (to_string(p) == token)
            return p;
    return std::nullopt;
}

std::int64_t SearchTrace::total_epochs() const
{
    return std::accumulate(events.begin(), events.end(), std::int64_t{ 0 },
                           [](std::int64_t s, TraceEvent const& e) { return s + e.epochs; });
}

nlohmann::ordered_json to_json(TraceEvent const& e)
{
    nlohmann::ordered_json j;
    j["phase"] = to_string(e.phase);
    j["hash"] = e.hash;
    j["depth"] = e.depth;
    j["stem_width"] = e.stem_width;
    j["epochs"] = e.epochs;
    j["val_acc"] = e.val_acc;
    j["params"] = e.params;
    j["accepted"] = e.accepted;
    if (e.compensation_failed)
        j["compensation_failed"] = true;
    return j;
}

TraceEvent trace_event_from_json(nlohmann::json const& j)
{
    TraceEvent e;
    auto phase = parse_phase(j.at("phase").get<std::string>());
    if (!phase)
        throw Error(ErrorCode::ParseError, "unknown phase " + j.at("phase").dump());
    e.phase = *phase;
    e.hash = j.at("hash").get<std::uint64_t>();
    e.depth = j.at("depth").get<int>();
    e.stem_width = j.at("stem_width").get<int>();
    e.epochs = j.at("epochs").get<int>();
    e.val_acc = j.at("val_acc").get<double>();
    e.params = j.at("params").get<std::int64_t>();
    e.accepted = j.at("accepted").get<bool>();
    e.compensation_failed = j.value("compensation_failed", false);
    return e;
}

void write_trace_jsonl(std::ostream& out, std::vector<TraceEvent> const& events)
{
    for (auto const& e : events)
        out << to_json(e).dump() << '\n';
}

MacroResult macro_search(SearchConfig const& config, Evaluator& evaluator)
{
    validate(config);
    auto const& b = config.bounds;
    LayerSpec const init_layer{ config.init_op, config.init_kernel };

    MacroResult out;
    SearchTrace& trace = out.trace;
    Recorder rec(evaluator, config, trace);

    // Grow
    int epochs = b.e_min;
    Architecture current = Architecture::uniform(b.d_min, b.w_max, init_layer, b.input_resolution, b.num_classes);
    auto& first = rec.run(Phase::Grow, current, epochs);
    first.accepted = true;
    ++trace.d_prime;

    Architecture best_arch = current;
    double best_acc = first.val_acc;
    while (current.depth < b.d_max && trace.grow_strikes < config.max_strikes)
    {
        current = grown(current, init_layer);
        ++epochs;
        auto& ev = rec.run(Phase::Grow, current, epochs);
        ++trace.d_prime;
        if (ev.val_acc >= best_acc + config.l_plus)
        {
            ev.accepted = true;
            best_acc = ev.val_acc;
            best_arch = current;
        }
        else if (ev.val_acc < best_acc - config.l_minus)
        {
            ++trace.grow_strikes;
        }
        // otherwise neutral: the chain keeps the layer and continues
    }
    trace.d_f = best_arch.depth;

    // Prune
    out.arch = best_arch;
    out.acc = best_acc;
    std::int64_t macro_params = count_params(best_arch, b.conventions());
    Architecture pruned = best_arch;
    double prune_best = best_acc;
    while (pruned.stem_width > b.w_min && trace.prune_strikes < config.max_strikes)
    {
        pruned = with_stem_width(pruned, std::max(pruned.stem_width - b.w_res, b.w_min));
        epochs += 2;
        auto& ev = rec.run(Phase::Prune, pruned, epochs);
        ++trace.w_prime;
        if (ev.val_acc >= prune_best)
        {
            ev.accepted = true;
            prune_best = ev.val_acc;
        }
        else
        {
            ++trace.prune_strikes;
        }
        if (ev.val_acc > out.acc || (ev.val_acc == out.acc && ev.params < macro_params))
        {
            out.arch = pruned;
            out.acc = ev.val_acc;
            macro_params = ev.params;
        }
    }
    out.last_epochs = epochs;
    return out;
}

Architecture compensate_width(Architecture const& arch, std::int64_t baseline_params, double slack, int w_min,
                              NetworkConventions conventions)
{
    double const limit = static_cast<double>(baseline_params) * (1.0 + slack);
    Architecture a = arch;
    while (static_cast<double>(count_params(a, conventions)) > limit && a.stem_width > w_min)
        a.stem_width -= 1;
    return a;
}

MicroResult micro_search(Architecture const& macro_arch, int epochs, SearchConfig const& config,
                         Evaluator& evaluator)
{
    validate(config);
    validate(macro_arch);
    if (epochs < 1)
        throw Error(ErrorCode::ConfigError, "micro epochs must be >= 1");
    auto const& b = config.bounds;
    auto const conventions = b.conventions();

    MicroResult out;
    SearchTrace& trace = out.trace;
    Recorder rec(evaluator, config, trace);
    trace.d_f = macro_arch.depth;

    auto& base = rec.run(Phase::MicroBaseline, macro_arch, epochs);
    base.accepted = true;
    out.baseline_acc = base.val_acc;
    out.baseline_params = count_params(macro_arch, conventions);
    double const limit = static_cast<double>(out.baseline_params) * (1.0 + config.param_slack);

    Architecture current = macro_arch;
    double best = out.baseline_acc;

    auto try_candidate = [&](Phase phase, Architecture candidate) {
        candidate = compensate_width(candidate, out.baseline_params, config.param_slack, b.w_min, conventions);
        bool const within = static_cast<double>(count_params(candidate, conventions)) <= limit;
        auto& ev = rec.run(phase, candidate, epochs);
        ++trace.micro_evals;
        ev.compensation_failed = !within;
        if (within && ev.val_acc > best)
        {
            ev.accepted = true;
            best = ev.val_acc;
            current = std::move(candidate);
        }
    };

    OpKind const target_op = alternative(b.ops, config.init_op);
    for (int i = 0; i < macro_arch.depth; ++i)
    {
        Architecture candidate = current;
        candidate.layers[static_cast<std::size_t>(i)].op = target_op;
        try_candidate(Phase::MicroOp, std::move(candidate));
    }

    int const target_kernel = alternative(b.kernels, config.init_kernel);
    for (int i = 0; i < macro_arch.depth; ++i)
    {
        Architecture candidate = current;
        candidate.layers[static_cast<std::size_t>(i)].kernel = target_kernel;
        try_candidate(Phase::MicroKernel, std::move(candidate));
    }

    out.arch = current;
    out.acc = best;
    return out;
}

SearchResult run_search(SearchConfig const& config, Evaluator& evaluator)
{
    auto macro = macro_search(config, evaluator);
    int const micro_epochs = config.micro_epochs > 0 ? config.micro_epochs : config.bounds.e_min;
    auto micro = micro_search(macro.arch, micro_epochs, config, evaluator);

    SearchResult r;
    r.macro_arch = macro.arch;
    r.macro_acc = macro.acc;
    r.final_arch = micro.arch;
    r.baseline_acc = micro.baseline_acc;
    r.final_acc = micro.acc;
    r.trace = std::move(macro.trace);
    r.trace.events.insert(r.trace.events.end(), micro.trace.events.begin(), micro.trace.events.end());
    r.trace.micro_evals = micro.trace.micro_evals;
    return r;
}

double relative_improvement(double acc_method, double acc_random_mean)
{
    if (!(acc_random_mean > 0.0))
        throw Error(ErrorCode::DivideByZero, "random baseline mean accuracy must be > 0");
    return 100.0 * (acc_method - acc_random_mean) / acc_random_mean;
}

RandomBaseline random_baseline(SearchConfig const& config, int n, int train_epochs, Evaluator& evaluator)
{
    validate(config);
    if (n < 1)
        throw Error(ErrorCode::ConfigError, "random baseline needs n >= 1");
    if (train_epochs < 1)
        throw Error(ErrorCode::ConfigError, "random baseline needs train_epochs >= 1");

    RandomBaseline out;
    SearchTrace scratch;
    Recorder rec(evaluator, config, scratch);
    std::vector<double> accs;
    std::vector<double> params;
    for (int i = 0; i < n; ++i)
    {
        auto arch = sample_random(config.bounds, config.seed + static_cast<std::uint64_t>(i));
        auto const& ev = rec.run(Phase::Random, arch, train_epochs);
        accs.push_back(ev.val_acc);
        params.push_back(static_cast<double>(ev.params));
        out.archs.push_back(std::move(arch));
    }
    out.events = std::move(scratch.events);

    auto mean_std = [](std::vector<double> const& v) {
        double const mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        if (v.size() < 2)
            return std::pair{ mean, 0.0 };
        double ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        return std::pair{ mean, std::sqrt(ss / static_cast<double>(v.size() - 1)) };
    };
    std::tie(out.mean_acc, out.std_acc) = mean_std(accs);
    std::tie(out.mean_params, out.std_params) = mean_std(params);
    return out;
}

}
