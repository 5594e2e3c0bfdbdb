#include "emsynth/synthesizer.hpp"

#include <string>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

Trace synthesize(const ExecutionPath& path, const BlockLibrary& library,
                 std::mt19937_64& rng) {
    const std::vector<PairKey> pairs = pairs_of(path);
    const int spc = library.samples_per_cycle();

    // Report every unusable pair at once, not just the first.
    std::string missing;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const PairKey& key = pairs[i];
        if (!library.contains(key)) {
            missing += (missing.empty() ? "" : ", ") + key.label();
            continue;
        }
        const std::size_t want = static_cast<std::size_t>(path.instructions[i].cycles) *
                                 static_cast<std::size_t>(spc);
        if (library.blocks(key).front().samples.size() != want) {
            missing += (missing.empty() ? "" : ", ") + key.label() +
                       " [stored block duration differs from the path's branch resolution]";
        }
    }
    if (!missing.empty()) {
        throw CoverageError("library does not cover pairs: " + missing);
    }

    Trace trace;
    trace.samples_per_cycle = spc;
    trace.origin = TraceOrigin::synthetic;
    trace.path_id = path.path_id;
    trace.alignment = 0;
    trace.samples.reserve(static_cast<std::size_t>(path.total_cycles()) *
                          static_cast<std::size_t>(spc));
    for (const PairKey& key : pairs) {
        const SignalBlock& block = sample_block(library, key, rng);
        trace.samples.insert(trace.samples.end(), block.samples.begin(),
                             block.samples.end());
    }
    return trace;
}

std::vector<Trace> synthesize_set(const ExecutionPath& path,
                                  const BlockLibrary& library, int n,
                                  std::uint64_t seed) {
    if (n < 1) throw ParameterError("synthesis count must be >= 1");
    std::vector<Trace> traces;
    traces.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(combine_seed(seed, static_cast<std::uint64_t>(i)));
        traces.push_back(synthesize(path, library, rng));
    }
    return traces;
}

} // namespace emsynth
