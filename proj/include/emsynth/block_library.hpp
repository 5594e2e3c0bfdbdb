#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "emsynth/device_sim.hpp"
#include "emsynth/isa.hpp"

namespace emsynth {

// (previous | current) instruction pair; the unit the signal database is
// keyed by.
struct PairKey {
    std::string prev;
    std::string cur;

    auto operator<=>(const PairKey&) const = default;
    std::string label() const { return "(" + prev + "|" + cur + ")"; }
};

// One stored signal segment for a pair: the samples of `cur` as captured
// directly after `prev`.
struct SignalBlock {
    PairKey key;
    std::vector<float> samples;
    int capture_id = 0;
};

// The pair-conditioned signal database.
class BlockLibrary {
public:
    BlockLibrary() = default;
    BlockLibrary(int samples_per_cycle, std::string config_digest,
                 std::string catalog_digest, std::uint64_t seed)
        : samples_per_cycle_(samples_per_cycle),
          config_digest_(std::move(config_digest)),
          catalog_digest_(std::move(catalog_digest)), seed_(seed) {}

    int samples_per_cycle() const { return samples_per_cycle_; }
    const std::string& config_digest() const { return config_digest_; }
    const std::string& catalog_digest() const { return catalog_digest_; }
    std::uint64_t seed() const { return seed_; }

    bool contains(const PairKey& key) const { return entries_.count(key) > 0; }
    const std::vector<SignalBlock>& blocks(const PairKey& key) const; // throws CoverageError
    const std::map<PairKey, std::vector<SignalBlock>>& entries() const { return entries_; }
    std::size_t pair_count() const { return entries_.size(); }

    // All blocks under one key must share a length; enforced on insert.
    void add_block(SignalBlock block);

private:
    int samples_per_cycle_ = 0;
    std::map<PairKey, std::vector<SignalBlock>> entries_;
    std::string config_digest_;
    std::string catalog_digest_;
    std::uint64_t seed_ = 0;
};

// Ordered pair keys of a path; element 0 pairs the first instruction with
// the loop's last instruction (steady-state wrap-around).
std::vector<PairKey> pairs_of(const ExecutionPath& path);

// Convenience: the union of pairs over several paths.
std::set<PairKey> pair_set_of(const std::vector<ExecutionPath>& paths);

// All ordered mnemonic pairs of the catalog.
std::set<PairKey> full_pair_set(const Catalog& catalog);

// One probe program per pair: `pad` nops, prev, cur, `pad` nops in a loop.
// Branch members get a label arrangement that keeps the canonical
// (all-taken) execution path equal to that sequence.
std::vector<Program> fingerprint_programs(const std::set<PairKey>& pairs,
                                          const Catalog& catalog, int pad = 4);

// Canonical execution path of a fingerprint program (branches taken).
ExecutionPath fingerprint_path(const Program& program, const Catalog& catalog);

// Captures examples_per_pair probe traces per pair and segments out the
// `cur` block by exact cycle arithmetic using the capture alignment.
// Each pair draws from its own seed stream derived from the config seed.
BlockLibrary build_library(const std::set<PairKey>& pairs, const Catalog& catalog,
                           const EmissionConfig& config, int examples_per_pair);

// Uniform draw over the blocks stored for `key`.
const SignalBlock& sample_block(const BlockLibrary& library, const PairKey& key,
                                std::mt19937_64& rng);

} // namespace emsynth
