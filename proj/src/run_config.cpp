#include <fstream>
#include <sstream>

#include "gnas/cli.hpp"
#include "gnas/error.hpp"

namespace gnas {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(std::string const& what)
{
    throw Error(ErrorCode::ConfigError, what);
}

ordered_json surrogate_defaults()
{
    SurrogateConfig const d;
    ordered_json j;
    j["a_base"] = d.a_base;
    j["a_p"] = d.a_p;
    j["p0"] = d.p0;
    j["a_d"] = d.a_d;
    j["d0"] = d.d0;
    j["sigma"] = d.sigma;
    j["a_floor"] = d.a_floor;
    j["tau0"] = d.tau0;
    j["p_tau"] = d.p_tau;
    j["seed"] = d.seed;
    return j;
}

ordered_json external_defaults()
{
    ExternalConfig const d;
    ordered_json j;
    j["command"] = ordered_json::array();
    j["timeout_s"] = d.timeout_s;
    return j;
}

std::vector<std::string> split_path(std::string_view key)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= key.size())
    {
        auto const dot = key.find('.', start);
        auto const end = dot == std::string_view::npos ? key.size() : dot;
        parts.emplace_back(key.substr(start, end - start));
        if (dot == std::string_view::npos)
            break;
        start = dot + 1;
    }
    return parts;
}

void merge(ordered_json& base, json const& user, std::string const& path)
{
    if (!user.is_object())
        config_error("'" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
    for (auto const& [key, value] : user.items())
    {
        std::string const p = path.empty() ? key : path + "." + key;
        if (!base.contains(key))
            config_error("unknown field '" + p + "'");
        auto& slot = base[key];
        if (slot.is_object() && value.is_object())
            merge(slot, value, p);
        else
            slot = value;
    }
}

// Typed field access by dotted path with the path in every error.
class Reader
{
public:
    explicit Reader(ordered_json const& root)
        : root_{ root }
    {}

    ordered_json const& node(std::string const& path) const
    {
        ordered_json const* cur = &root_;
        for (auto const& part : split_path(path))
        {
            if (!cur->is_object() || !cur->contains(part))
                config_error("missing field '" + path + "'");
            cur = &(*cur)[part];
        }
        return *cur;
    }

    int integer(std::string const& path) const
    {
        auto const& n = node(path);
        if (!n.is_number_integer())
            config_error("field '" + path + "' must be an integer, got " + n.dump());
        auto const v = n.get<std::int64_t>();
        if (v < INT32_MIN || v > INT32_MAX)
            config_error("field '" + path + "' is out of range");
        return static_cast<int>(v);
    }

    std::uint64_t seed(std::string const& path) const
    {
        auto const& n = node(path);
        if (!n.is_number_integer() || (n.is_number_integer() && !n.is_number_unsigned() && n.get<std::int64_t>() < 0))
            config_error("field '" + path + "' must be a non-negative integer, got " + n.dump());
        return n.get<std::uint64_t>();
    }

    double number(std::string const& path) const
    {
        auto const& n = node(path);
        if (!n.is_number())
            config_error("field '" + path + "' must be a number, got " + n.dump());
        return n.get<double>();
    }

    std::string string(std::string const& path) const
    {
        auto const& n = node(path);
        if (!n.is_string())
            config_error("field '" + path + "' must be a string, got " + n.dump());
        return n.get<std::string>();
    }

private:
    ordered_json const& root_;
};

OpKind op_value(ordered_json const& n, std::string const& path)
{
    if (!n.is_string())
        config_error("field '" + path + "' must be \"sep\" or \"conv\", got " + n.dump());
    auto const s = n.get<std::string>();
    if (s == "sep")
        return OpKind::Separable;
    if (s == "conv")
        return OpKind::Plain;
    config_error("field '" + path + "' must be \"sep\" or \"conv\", got \"" + s + "\"");
}

Experiment experiment_field(Reader const& r)
{
    auto const s = r.string("experiment");
    for (auto e : { Experiment::Search, Experiment::RankExperiment, Experiment::RandomBaseline,
                    Experiment::SpaceSize, Experiment::EvalOne })
        if (to_string(e) == s)
            return e;
    config_error("field 'experiment' must be one of search, rank_experiment, random_baseline, "
                 "space_size, eval_one; got \"" +
                 s + "\"");
}

}

std::string_view to_string(Experiment e)
{
    switch (e)
    {
    case Experiment::Search: return "search";
    case Experiment::RankExperiment: return "rank_experiment";
    case Experiment::RandomBaseline: return "random_baseline";
    case Experiment::SpaceSize: return "space_size";
    case Experiment::EvalOne: return "eval_one";
    }
    return "unknown";
}

ordered_json default_config_json()
{
    RunConfig const d;
    SearchConfig const& s = d.search;
    SearchBounds const& b = s.bounds;

    ordered_json bounds;
    bounds["d_min"] = b.d_min;
    bounds["d_max"] = b.d_max;
    bounds["w_min"] = b.w_min;
    bounds["w_max"] = b.w_max;
    bounds["w_res"] = b.w_res;
    bounds["e_min"] = b.e_min;
    bounds["ops"] = ordered_json::array();
    for (auto op : b.ops)
        bounds["ops"].push_back(op_token(op));
    bounds["kernels"] = b.kernels;
    bounds["num_stages"] = b.num_stages;
    bounds["input_resolution"] = b.input_resolution;
    bounds["num_classes"] = b.num_classes;
    bounds["image_channels"] = b.image_channels;

    ordered_json search;
    search["bounds"] = bounds;
    search["l_plus"] = s.l_plus;
    search["l_minus"] = s.l_minus;
    search["max_strikes"] = s.max_strikes;
    search["init_op"] = op_token(s.init_op);
    search["init_kernel"] = s.init_kernel;
    search["seed"] = s.seed;
    search["param_slack"] = s.param_slack;
    search["micro_epochs"] = s.micro_epochs;

    ordered_json j;
    j["experiment"] = to_string(d.experiment);
    j["output_dir"] = d.output_dir.string();
    j["cache_path"] = "";
    j["search"] = search;
    j["evaluator"] = { { "surrogate", surrogate_defaults() } };
    j["rank_experiment"] = { { "cohort_size", d.rank.cohort_size },
                             { "short_epochs", d.rank.short_epochs },
                             { "base_epochs", d.rank.base_epochs },
                             { "full_epochs", d.rank.full_epochs } };
    j["random_baseline"] = { { "n", d.random.n }, { "train_epochs", d.random.train_epochs } };
    j["ablation"] = { { "random_samples", d.ablation.random_samples },
                      { "final_epochs", d.ablation.final_epochs } };
    j["space_size"] = { { "d_f", d.space_d_f } };
    j["eval_one"] = { { "arch", nullptr }, { "epochs", d.eval_one.epochs } };
    return j;
}

namespace {

ordered_json resolve_evaluator(json const& user)
{
    if (!user.is_object() || user.size() != 1)
        config_error("'evaluator' must have exactly one of 'surrogate' or 'external'");
    auto const kind = user.begin().key();
    ordered_json resolved;
    if (kind == "surrogate")
        resolved = { { "surrogate", surrogate_defaults() } };
    else if (kind == "external")
        resolved = { { "external", external_defaults() } };
    else
        config_error("unknown evaluator '" + kind + "'; expected 'surrogate' or 'external'");
    merge(resolved, user, "evaluator");
    return resolved;
}

}

ordered_json resolve_config(json const& user)
{
    if (!user.is_object())
        config_error("config must be a JSON object");
    ordered_json resolved = default_config_json();
    json rest = user;
    if (auto it = rest.find("evaluator"); it != rest.end())
    {
        resolved["evaluator"] = resolve_evaluator(*it);
        rest.erase(it);
    }
    merge(resolved, rest, "");
    return resolved;
}

void apply_override(ordered_json& resolved, std::string_view assignment)
{
    auto const eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        config_error("override '" + std::string(assignment) + "' must look like KEY=VALUE");
    std::string const key(assignment.substr(0, eq));
    std::string const text(assignment.substr(eq + 1));

    ordered_json* cur = &resolved;
    for (auto const& part : split_path(key))
    {
        if (!cur->is_object() || !cur->contains(part))
            config_error("unknown override key '" + key + "'");
        cur = &(*cur)[part];
    }
    ordered_json value;
    try
    {
        value = ordered_json::parse(text);
    }
    catch (json::parse_error const&)
    {
        value = text;
    }
    // switching evaluator kind picks up that kind's defaults
    if (key == "evaluator")
        value = resolve_evaluator(json::parse(value.dump()));
    *cur = std::move(value);
}

RunConfig run_config_from_json(ordered_json const& resolved)
{
    Reader r(resolved);
    RunConfig c;
    c.experiment = experiment_field(r);
    c.output_dir = r.string("output_dir");
    c.cache_path = r.string("cache_path");

    auto& b = c.search.bounds;
    b.d_min = r.integer("search.bounds.d_min");
    b.d_max = r.integer("search.bounds.d_max");
    b.w_min = r.integer("search.bounds.w_min");
    b.w_max = r.integer("search.bounds.w_max");
    b.w_res = r.integer("search.bounds.w_res");
    b.e_min = r.integer("search.bounds.e_min");
    b.num_stages = r.integer("search.bounds.num_stages");
    b.input_resolution = r.integer("search.bounds.input_resolution");
    b.num_classes = r.integer("search.bounds.num_classes");
    b.image_channels = r.integer("search.bounds.image_channels");
    auto const& ops = r.node("search.bounds.ops");
    if (!ops.is_array())
        config_error("field 'search.bounds.ops' must be an array");
    b.ops.clear();
    for (std::size_t i = 0; i < ops.size(); ++i)
        b.ops.push_back(op_value(ops[i], "search.bounds.ops[" + std::to_string(i) + "]"));
    auto const& kernels = r.node("search.bounds.kernels");
    if (!kernels.is_array())
        config_error("field 'search.bounds.kernels' must be an array");
    b.kernels.clear();
    for (auto const& k : kernels)
    {
        if (!k.is_number_integer())
            config_error("field 'search.bounds.kernels' must hold integers, got " + k.dump());
        b.kernels.push_back(k.get<int>());
    }

    auto& s = c.search;
    s.l_plus = r.number("search.l_plus");
    s.l_minus = r.number("search.l_minus");
    s.max_strikes = r.integer("search.max_strikes");
    s.init_op = op_value(r.node("search.init_op"), "search.init_op");
    s.init_kernel = r.integer("search.init_kernel");
    s.seed = r.seed("search.seed");
    s.param_slack = r.number("search.param_slack");
    s.micro_epochs = r.integer("search.micro_epochs");

    auto const& ev = r.node("evaluator");
    if (ev.contains("surrogate"))
    {
        SurrogateConfig sc;
        sc.a_base = r.number("evaluator.surrogate.a_base");
        sc.a_p = r.number("evaluator.surrogate.a_p");
        sc.p0 = r.number("evaluator.surrogate.p0");
        sc.a_d = r.number("evaluator.surrogate.a_d");
        sc.d0 = r.number("evaluator.surrogate.d0");
        sc.sigma = r.number("evaluator.surrogate.sigma");
        sc.a_floor = r.number("evaluator.surrogate.a_floor");
        sc.tau0 = r.number("evaluator.surrogate.tau0");
        sc.p_tau = r.number("evaluator.surrogate.p_tau");
        sc.seed = r.seed("evaluator.surrogate.seed");
        sc.conventions = b.conventions();
        c.evaluator = sc;
    }
    else
    {
        ExternalConfig ec;
        auto const& cmd = r.node("evaluator.external.command");
        if (!cmd.is_array() || cmd.empty())
            config_error("field 'evaluator.external.command' must be a non-empty array of strings");
        for (auto const& a : cmd)
        {
            if (!a.is_string())
                config_error("field 'evaluator.external.command' must hold strings");
            ec.command.push_back(a.get<std::string>());
        }
        ec.timeout_s = r.number("evaluator.external.timeout_s");
        if (!(ec.timeout_s > 0))
            config_error("field 'evaluator.external.timeout_s' must be > 0");
        c.evaluator = ec;
    }

    c.rank.cohort_size = r.integer("rank_experiment.cohort_size");
    c.rank.short_epochs = r.integer("rank_experiment.short_epochs");
    c.rank.base_epochs = r.integer("rank_experiment.base_epochs");
    c.rank.full_epochs = r.integer("rank_experiment.full_epochs");
    c.random.n = r.integer("random_baseline.n");
    c.random.train_epochs = r.integer("random_baseline.train_epochs");
    c.ablation.random_samples = r.integer("ablation.random_samples");
    c.ablation.final_epochs = r.integer("ablation.final_epochs");
    c.space_d_f = r.integer("space_size.d_f");
    c.eval_one.epochs = r.integer("eval_one.epochs");
    if (auto const& arch = r.node("eval_one.arch"); !arch.is_null())
    {
        try
        {
            c.eval_one.arch = architecture_from_json(json::parse(arch.dump()));
        }
        catch (Error const& e)
        {
            config_error("field 'eval_one.arch': " + e.detail());
        }
    }

    try
    {
        validate(c.search);
    }
    catch (Error const& e)
    {
        config_error(e.detail());
    }
    if (auto const* sc = std::get_if<SurrogateConfig>(&c.evaluator))
        validate(*sc);

    if (c.rank.cohort_size < 2)
        config_error("field 'rank_experiment.cohort_size' must be >= 2");
    if (c.rank.short_epochs < 1 || c.rank.short_epochs >= c.rank.full_epochs)
        config_error("rank_experiment requires 1 <= short_epochs < full_epochs");
    if (c.rank.base_epochs < 1)
        config_error("field 'rank_experiment.base_epochs' must be >= 1");
    if (c.random.n < 1 || c.random.train_epochs < 1)
        config_error("random_baseline requires n >= 1 and train_epochs >= 1");
    if (c.ablation.random_samples < 0 || c.ablation.final_epochs < 1)
        config_error("ablation requires random_samples >= 0 and final_epochs >= 1");
    if (c.space_d_f < 1)
        config_error("field 'space_size.d_f' must be >= 1");
    if (c.eval_one.epochs < 1)
        config_error("field 'eval_one.epochs' must be >= 1");
    if (c.experiment == Experiment::EvalOne && !c.eval_one.arch)
        config_error("experiment eval_one needs 'eval_one.arch'");
    return c;
}

ordered_json load_resolved_config(RunOptions const& options)
{
    std::ifstream in(options.config_path);
    if (!in)
        config_error("cannot open config file '" + options.config_path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();

    json user;
    try
    {
        user = json::parse(buf.str());
    }
    catch (json::parse_error const& e)
    {
        config_error(options.config_path.string() + ": " + e.what());
    }

    auto resolved = resolve_config(user);
    for (auto const& o : options.overrides)
        apply_override(resolved, o);
    if (options.seed)
    {
        resolved["search"]["seed"] = *options.seed;
        if (resolved["evaluator"].contains("surrogate"))
            resolved["evaluator"]["surrogate"]["seed"] = *options.seed;
    }
    if (options.out_dir)
        resolved["output_dir"] = options.out_dir->string();
    run_config_from_json(resolved); // validates
    return resolved;
}

}
