#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace beamsel {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used as a counter-based mixer to derive independent
/// stream seeds from a master seed and a tuple of counters, so a trial's
/// stream depends only on (seed, point, trial, ...) and never on scheduling.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters);

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> counters)
{
    return Rng(derive_seed(master, counters));
}

}  // namespace beamsel
