#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gnas/external_evaluator.hpp"
#include "gnas/search.hpp"

namespace gnas {

enum class Experiment
{
    Search,
    RankExperiment,
    RandomBaseline,
    SpaceSize,
    EvalOne,
};

std::string_view to_string(Experiment e);

struct RankExperimentSettings
{
    int cohort_size = 50;
    int short_epochs = 1;
    int base_epochs = 1;
    int full_epochs = 50;
};

struct RandomBaselineSettings
{
    int n = 10;
    int train_epochs = 50;
};

/// Optional random-sampling comparison after a search. The searched network
/// and every random sample are trained for the same final budget.
struct AblationSettings
{
    int random_samples = 0; // 0 disables
    int final_epochs = 50;
};

struct EvalOneSettings
{
    std::optional<Architecture> arch;
    int epochs = 10;
};

struct RunConfig
{
    Experiment experiment = Experiment::Search;
    SearchConfig search{};
    std::variant<SurrogateConfig, ExternalConfig> evaluator = SurrogateConfig{};
    std::filesystem::path output_dir = "gnas_out";
    std::filesystem::path cache_path; // empty: in-memory cache only
    RankExperimentSettings rank{};
    RandomBaselineSettings random{};
    AblationSettings ablation{};
    int space_d_f = 25;
    EvalOneSettings eval_one{};
};

/// Every field with its default value. This is the config schema: a user
/// document may only contain keys that appear here.
nlohmann::ordered_json default_config_json();

/// Merges `user` over the defaults, rejecting unknown keys (CONFIG_ERROR).
nlohmann::ordered_json resolve_config(nlohmann::json const& user);

/// Applies one dotted KEY=VALUE override. VALUE is parsed as JSON when
/// possible, otherwise taken as a string. Unknown keys are CONFIG_ERROR.
void apply_override(nlohmann::ordered_json& resolved, std::string_view assignment);

/// Typed view of a resolved document. Throws CONFIG_ERROR naming the field.
RunConfig run_config_from_json(nlohmann::ordered_json const& resolved);

struct RunOptions
{
    std::filesystem::path config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed; // sets search.seed and the surrogate seed
    std::optional<std::filesystem::path> out_dir;
};

/// Loads, resolves and validates a config file plus command-line overrides.
nlohmann::ordered_json load_resolved_config(RunOptions const& options);

/// Runs the configured experiment and writes config.json, summary.json,
/// report.txt and, where applicable, trace.jsonl and ranking reports into
/// the output directory. Returns 0 on success, 1 on evaluator failure and 2
/// on a configuration error.
int run(RunOptions const& options, std::ostream& out, std::ostream& err);

/// Fixed-width text rendering of a summary document. Throws PARSE_ERROR.
std::string render_report(nlohmann::json const& summary);

/// Human-readable million-parameter figure, e.g. 460000 -> "0.46M".
std::string format_params_millions(std::int64_t params);

/// Reads `summary_path` and prints the rendered report. Returns 0 on
/// success, 2 on a missing or malformed summary.
int report(std::filesystem::path const& summary_path, std::ostream& out, std::ostream& err);

}
