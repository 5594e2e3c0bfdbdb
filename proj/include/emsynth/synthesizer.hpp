#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "emsynth/block_library.hpp"
#include "emsynth/device_sim.hpp"
#include "emsynth/isa.hpp"

namespace emsynth {

// Assembles a synthetic trace for the path by concatenating one uniformly
// drawn block per instruction pair, in path order. The result carries no
// drift (alignment 0) and its length is exactly total cycles * spc.
Trace synthesize(const ExecutionPath& path, const BlockLibrary& library,
                 std::mt19937_64& rng);

// n independent draws, reproducible from `seed`; trace i uses its own
// derived stream so generation order cannot affect the output.
std::vector<Trace> synthesize_set(const ExecutionPath& path,
                                  const BlockLibrary& library, int n,
                                  std::uint64_t seed);

} // namespace emsynth
