#include "gnas/architecture.hpp"

#include <algorithm>
#include <random>

#include "gnas/error.hpp"
#include "gnas/hash.hpp"

namespace gnas {

namespace {

[[noreturn]] void bad_arch(std::string const& what)
{
    throw Error(ErrorCode::InvalidArchitecture, what);
}

[[noreturn]] void bad_bounds(std::string const& what)
{
    throw Error(ErrorCode::InvalidBounds, what);
}

// Unbiased draw from [0, n); the standard distributions are not portable.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n)
{
    std::uint64_t const threshold = (0 - n) % n;
    std::uint64_t x = rng();
    while (x < threshold)
        x = rng();
    return x % n;
}

}

std::string_view op_token(OpKind op)
{
    return op == OpKind::Separable ? "sep" : "conv";
}

OpKind parse_op(std::string_view token)
{
    if (token == "sep")
        return OpKind::Separable;
    if (token == "conv")
        return OpKind::Plain;
    bad_arch("unknown op '" + std::string(token) + "'");
}

Architecture Architecture::uniform(int depth, int stem_width, LayerSpec layer,
                                   int input_resolution, int num_classes)
{
    Architecture a;
    a.depth = depth;
    a.stem_width = stem_width;
    a.layers.assign(static_cast<std::size_t>(std::max(depth, 0)), layer);
    a.input_resolution = input_resolution;
    a.num_classes = num_classes;
    return a;
}

void validate(Architecture const& arch)
{
    if (arch.depth < 1)
        bad_arch("depth must be >= 1, got " + std::to_string(arch.depth));
    if (arch.stem_width < 1)
        bad_arch("stem_width must be >= 1, got " + std::to_string(arch.stem_width));
    if (arch.input_resolution < 1)
        bad_arch("input_resolution must be >= 1");
    if (arch.num_classes < 1)
        bad_arch("num_classes must be >= 1");
    if (arch.layers.size() != static_cast<std::size_t>(arch.depth))
        bad_arch("layers.length " + std::to_string(arch.layers.size()) + " != depth " +
                 std::to_string(arch.depth));
    for (auto const& l : arch.layers)
        if (l.kernel < 1 || l.kernel % 2 == 0)
            bad_arch("kernel must be a positive odd integer, got " + std::to_string(l.kernel));
}

Architecture grown(Architecture const& arch, LayerSpec layer)
{
    Architecture a = arch;
    a.layers.push_back(layer);
    a.depth = static_cast<int>(a.layers.size());
    return a;
}

Architecture with_stem_width(Architecture const& arch, int stem_width)
{
    Architecture a = arch;
    a.stem_width = stem_width;
    return a;
}

void validate(SearchBounds const& b)
{
    if (b.d_min < 1 || b.d_min > b.d_max)
        bad_bounds("require 1 <= d_min <= d_max");
    if (b.w_min < 1 || b.w_min > b.w_max)
        bad_bounds("require 1 <= w_min <= w_max");
    if (b.w_res < 1)
        bad_bounds("w_res must be >= 1");
    if (b.e_min < 1)
        bad_bounds("e_min must be >= 1");
    if (b.ops.empty())
        bad_bounds("ops must be non-empty");
    if (b.kernels.empty())
        bad_bounds("kernels must be non-empty");
    for (int k : b.kernels)
        if (k < 1 || k % 2 == 0)
            bad_bounds("kernels must be positive odd integers");
    if (b.num_stages < 0)
        bad_bounds("num_stages must be >= 0");
    if (b.input_resolution < 1 || b.num_classes < 1 || b.image_channels < 1)
        bad_bounds("input_resolution, num_classes and image_channels must be >= 1");
    if (b.num_stages >= 31 || (1 << b.num_stages) > b.input_resolution)
        bad_bounds("2^num_stages exceeds input_resolution");
}

bool contains(SearchBounds const& b, Architecture const& arch)
{
    if (arch.depth < b.d_min || arch.depth > b.d_max)
        return false;
    if (arch.stem_width < b.w_min || arch.stem_width > b.w_max)
        return false;
    return std::all_of(arch.layers.begin(), arch.layers.end(), [&](LayerSpec const& l) {
        return std::find(b.ops.begin(), b.ops.end(), l.op) != b.ops.end() &&
               std::find(b.kernels.begin(), b.kernels.end(), l.kernel) != b.kernels.end();
    });
}

WidthSchedule derive_schedule(Architecture const& arch, int num_stages)
{
    validate(arch);
    if (num_stages < 0)
        throw Error(ErrorCode::ScheduleError, "num_stages must be >= 0");
    if (num_stages >= 31 || (1 << num_stages) > arch.input_resolution)
        throw Error(ErrorCode::ScheduleError,
                    "2^" + std::to_string(num_stages) + " exceeds input resolution " +
                        std::to_string(arch.input_resolution));

    WidthSchedule s;
    for (int i = 1; i <= num_stages; ++i)
    {
        int const pos = static_cast<int>(
            static_cast<std::int64_t>(i) * arch.depth / (num_stages + 1));
        if (pos >= 1 && (s.downsample_at.empty() || s.downsample_at.back() != pos))
            s.downsample_at.push_back(pos);
    }

    s.per_layer_width.reserve(static_cast<std::size_t>(arch.depth));
    int width = arch.stem_width;
    auto next = s.downsample_at.begin();
    for (int layer = 1; layer <= arch.depth; ++layer)
    {
        if (next != s.downsample_at.end() && *next == layer)
        {
            if (layer > 1)
                width *= 2;
            ++next;
        }
        s.per_layer_width.push_back(width);
    }
    return s;
}

std::int64_t count_params(Architecture const& arch, NetworkConventions conventions)
{
    auto const schedule = derive_schedule(arch, conventions.num_stages);
    std::int64_t total = 0;
    std::int64_t c_in = conventions.image_channels;
    for (std::size_t i = 0; i < arch.layers.size(); ++i)
    {
        std::int64_t const c_out = schedule.per_layer_width[i];
        std::int64_t const k2 = static_cast<std::int64_t>(arch.layers[i].kernel) * arch.layers[i].kernel;
        if (arch.layers[i].op == OpKind::Plain)
            total += c_in * c_out * k2;
        else
            total += c_in * k2 + c_in * c_out;
        total += 2 * c_out;
        c_in = c_out;
    }
    total += c_in * arch.num_classes + arch.num_classes;
    return total;
}

BigInt space_size(SearchBounds const& bounds, int d_f)
{
    validate(bounds);
    if (d_f < 1)
        bad_bounds("d_f must be >= 1");
    BigInt const choices = static_cast<unsigned>(bounds.ops.size() * bounds.kernels.size());
    BigInt n = boost::multiprecision::pow(choices, static_cast<unsigned>(d_f));
    n *= bounds.depth_range();
    n *= bounds.width_grid_size();
    return n;
}

Architecture sample_random(SearchBounds const& bounds, std::uint64_t seed)
{
    validate(bounds);
    std::mt19937_64 rng(seed);
    Architecture a;
    a.depth = bounds.d_min + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(bounds.depth_range())));
    a.stem_width = bounds.w_min + bounds.w_res * static_cast<int>(uniform_below(
                                                     rng, static_cast<std::uint64_t>(bounds.width_grid_size())));
    a.input_resolution = bounds.input_resolution;
    a.num_classes = bounds.num_classes;
    a.layers.clear();
    a.layers.reserve(static_cast<std::size_t>(a.depth));
    for (int i = 0; i < a.depth; ++i)
    {
        LayerSpec l;
        l.op = bounds.ops[uniform_below(rng, bounds.ops.size())];
        l.kernel = bounds.kernels[uniform_below(rng, bounds.kernels.size())];
        a.layers.push_back(l);
    }
    return a;
}

nlohmann::ordered_json to_json(Architecture const& arch)
{
    nlohmann::ordered_json j;
    j["depth"] = arch.depth;
    j["stem_width"] = arch.stem_width;
    j["input_resolution"] = arch.input_resolution;
    j["num_classes"] = arch.num_classes;
    auto layers = nlohmann::ordered_json::array();
    for (auto const& l : arch.layers)
    {
        nlohmann::ordered_json lj;
        lj["op"] = op_token(l.op);
        lj["kernel"] = l.kernel;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

Architecture architecture_from_json(nlohmann::json const& j)
{
    if (!j.is_object())
        bad_arch("architecture must be a JSON object");
    for (auto const& [key, _] : j.items())
        if (key != "depth" && key != "stem_width" && key != "input_resolution" &&
            key != "num_classes" && key != "layers")
            bad_arch("unknown architecture field '" + key + "'");

    auto int_field = [&](char const* name) {
        auto it = j.find(name);
        if (it == j.end() || !it->is_number_integer())
            bad_arch(std::string("missing or non-integer field '") + name + "'");
        return it->get<int>();
    };

    Architecture a;
    a.depth = int_field("depth");
    a.stem_width = int_field("stem_width");
    a.input_resolution = int_field("input_resolution");
    a.num_classes = int_field("num_classes");
    auto it = j.find("layers");
    if (it == j.end() || !it->is_array())
        bad_arch("missing 'layers' array");
    a.layers.clear();
    for (auto const& lj : *it)
    {
        if (!lj.is_object() || !lj.contains("op") || !lj.contains("kernel") ||
            !lj["op"].is_string() || !lj["kernel"].is_number_integer())
            bad_arch("layer must be {\"op\":str,\"kernel\":int}");
        a.layers.push_back({ parse_op(lj["op"].get<std::string>()), lj["kernel"].get<int>() });
    }
    validate(a);
    return a;
}

std::string to_canonical_json(Architecture const& arch)
{
    return to_json(arch).dump();
}

Architecture parse_architecture(std::string_view text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        bad_arch(std::string("invalid JSON: ") + e.what());
    }
    return architecture_from_json(j);
}

std::uint64_t arch_hash(Architecture const& arch)
{
    return splitmix64(fnv1a64(to_canonical_json(arch)));
}

}
