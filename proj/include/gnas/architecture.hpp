#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace gnas {

enum class OpKind
{
    Separable,
    Plain,
};

/// Wire token: "sep" or "conv".
std::string_view op_token(OpKind op);
OpKind parse_op(std::string_view token);

struct LayerSpec
{
    OpKind op = OpKind::Separable;
    int kernel = 3;

    bool operator==(LayerSpec const&) const = default;
};

/// Settings that shape a network but are not part of its searched identity.
struct NetworkConventions
{
    int num_stages = 3;
    int image_channels = 3;
};

/// A plain feed-forward CNN: `depth` conv layers, stride-2 stage boundaries
/// with channel doubling, global pooling and one linear classifier.
struct Architecture
{
    int depth = 1;
    int stem_width = 16;
    std::vector<LayerSpec> layers{ LayerSpec{} };
    int input_resolution = 32;
    int num_classes = 10;

    bool operator==(Architecture const&) const = default;

    static Architecture uniform(int depth, int stem_width, LayerSpec layer,
                                int input_resolution = 32, int num_classes = 10);
};

/// Throws InvalidArchitecture.
void validate(Architecture const& arch);

/// Returns a copy with one more layer appended before the head.
Architecture grown(Architecture const& arch, LayerSpec layer);
Architecture with_stem_width(Architecture const& arch, int stem_width);

struct SearchBounds
{
    int d_min = 10;
    int d_max = 100;
    int w_min = 16;
    int w_max = 64;
    int w_res = 2;
    int e_min = 10;
    std::vector<OpKind> ops{ OpKind::Separable, OpKind::Plain };
    std::vector<int> kernels{ 3, 5 };
    int num_stages = 3;

    // Dataset shape shared by every candidate in the space.
    int input_resolution = 32;
    int num_classes = 10;
    int image_channels = 3;

    int depth_range() const { return d_max - d_min + 1; }
    int width_grid_size() const { return (w_max - w_min) / w_res + 1; }
    NetworkConventions conventions() const { return { num_stages, image_channels }; }

    bool operator==(SearchBounds const&) const = default;
};

/// Throws InvalidBounds.
void validate(SearchBounds const& bounds);

/// True when every variable of `arch` lies inside `bounds` (width on the grid
/// is not required; micro search produces off-grid widths).
bool contains(SearchBounds const& bounds, Architecture const& arch);

struct WidthSchedule
{
    std::vector<int> per_layer_width;
    std::vector<int> downsample_at; // 1-indexed layer positions with stride 2
};

/// Evenly spaced stride-2 layers at floor(i * depth / (num_stages + 1)),
/// i = 1..num_stages, positions < 1 dropped and duplicates merged. Width
/// doubles at every downsample layer after the first; a stride-2 first layer
/// keeps the stem width. Throws ScheduleError when 2^num_stages exceeds the
/// input resolution.
WidthSchedule derive_schedule(Architecture const& arch, int num_stages);

/// Exact trainable parameter count: conv weights (no bias), batch-norm affine
/// pairs and the pooled linear classifier.
std::int64_t count_params(Architecture const& arch, NetworkConventions conventions = {});

using BigInt = boost::multiprecision::cpp_int;

/// (|ops| * |kernels|)^d_f * |depth range| * |width grid|, exactly.
BigInt space_size(SearchBounds const& bounds, int d_f);

/// Uniform draw over depth, the width grid and per-layer op/kernel choices.
/// Uses mt19937_64 with rejection sampling so results match across platforms.
Architecture sample_random(SearchBounds const& bounds, std::uint64_t seed);

nlohmann::ordered_json to_json(Architecture const& arch);
Architecture architecture_from_json(nlohmann::json const& j);

/// Compact canonical form; also the hash input.
std::string to_canonical_json(Architecture const& arch);
Architecture parse_architecture(std::string_view text);

std::uint64_t arch_hash(Architecture const& arch);

}
