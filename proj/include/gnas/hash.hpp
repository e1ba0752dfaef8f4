#pragma once

#include <cstdint>
#include <string_view>

namespace gnas {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Maps a 64-bit word onto [-1, 1] using its top 53 bits.
constexpr double to_unit_interval_signed(std::uint64_t x) noexcept
{
    double const unit = static_cast<double>(x >> 11) * 0x1.0p-53; // [0, 1)
    return 2.0 * unit - 1.0;
}

}
