#include "emsynth/block_library.hpp"

#include <algorithm>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

const std::vector<SignalBlock>& BlockLibrary::blocks(const PairKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw CoverageError("library has no blocks for pair " + key.label());
    }
    return it->second;
}

void BlockLibrary::add_block(SignalBlock block) {
    auto& list = entries_[block.key];
    if (!list.empty() && list.front().samples.size() != block.samples.size()) {
        throw Error("inconsistent block length for pair " + block.key.label());
    }
    list.push_back(std::move(block));
}

std::vector<PairKey> pairs_of(const ExecutionPath& path) {
    if (path.instructions.empty()) {
        throw ParameterError("cannot derive pairs of an empty path");
    }
    const std::size_t n = path.instructions.size();
    std::vector<PairKey> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pairs.push_back(PairKey{path.instructions[(i + n - 1) % n].mnemonic,
                                path.instructions[i].mnemonic});
    }
    return pairs;
}

std::set<PairKey> pair_set_of(const std::vector<ExecutionPath>& paths) {
    std::set<PairKey> out;
    for (const ExecutionPath& path : paths) {
        for (PairKey& key : pairs_of(path)) out.insert(std::move(key));
    }
    return out;
}

std::set<PairKey> full_pair_set(const Catalog& catalog) {
    std::set<PairKey> out;
    for (const std::string& prev : catalog.mnemonics()) {
        for (const std::string& cur : catalog.mnemonics()) {
            out.insert(PairKey{prev, cur});
        }
    }
    return out;
}

namespace {

// Probe body: pad nops, prev, cur, pad nops. A branch `prev` targets the
// label placed on `cur` so the taken path falls through to it; a branch
// `cur` targets the loop start, which simply closes the iteration early
// (the trailing nops only serve to isolate the pair anyway).
Program make_fingerprint_program(const PairKey& key, const Catalog& catalog, int pad) {
    const CatalogEntry& prev_entry = catalog.entry(key.prev);
    const CatalogEntry& cur_entry = catalog.entry(key.cur);

    Program program;
    program.name = "fp_" + key.prev + "_" + key.cur;
    program.labels.emplace_back("loop", 0);

    const Instruction nop = make_instruction(catalog, "nop");
    for (int i = 0; i < pad; ++i) program.loop_body.push_back(nop);

    Instruction prev = make_instruction(catalog, key.prev);
    if (prev_entry.op_class == OpClass::branch) prev.operands = {"pair_target"};
    program.loop_body.push_back(std::move(prev));

    program.labels.emplace_back("pair_target", program.loop_body.size());
    Instruction cur = make_instruction(catalog, key.cur);
    if (cur_entry.op_class == OpClass::branch) cur.operands = {"loop"};
    program.loop_body.push_back(std::move(cur));

    for (int i = 0; i < pad; ++i) program.loop_body.push_back(nop);
    return program;
}

} // namespace

std::vector<Program> fingerprint_programs(const std::set<PairKey>& pairs,
                                          const Catalog& catalog, int pad) {
    if (pad < 2) throw ParameterError("nop pad must be >= 2");
    std::vector<Program> programs;
    programs.reserve(pairs.size());
    for (const PairKey& key : pairs) {
        catalog.entry(key.prev);
        catalog.entry(key.cur);
        programs.push_back(make_fingerprint_program(key, catalog, pad));
    }
    return programs;
}

ExecutionPath fingerprint_path(const Program& program, const Catalog& catalog) {
    BranchResolutions taken;
    for (std::size_t i = 0; i < program.loop_body.size(); ++i) {
        if (catalog.entry(program.loop_body[i].mnemonic).conditional_branch()) {
            taken[i] = BranchOutcome::taken;
        }
    }
    return flatten_paths(program, catalog, taken).front();
}

BlockLibrary build_library(const std::set<PairKey>& pairs, const Catalog& catalog,
                           const EmissionConfig& config, int examples_per_pair) {
    if (examples_per_pair < 1) throw ParameterError("examples_per_pair must be >= 1");
    config.validate();

    constexpr int kPad = 4;
    BlockLibrary library(config.samples_per_cycle, config.digest(),
                         catalog.digest(), config.seed);

    for (const PairKey& key : pairs) {
        const Program program = make_fingerprint_program(key, catalog, kPad);
        const ExecutionPath path = fingerprint_path(program, catalog);

        // The pair sits at fixed positions pad and pad+1 of the path.
        int offset_cycles = 0;
        for (int i = 0; i < kPad + 1; ++i) offset_cycles += path.instructions[i].cycles;
        const int block_cycles = path.instructions[kPad + 1].cycles;
        const std::size_t start =
            static_cast<std::size_t>(offset_cycles) *
            static_cast<std::size_t>(config.samples_per_cycle);
        const std::size_t length =
            static_cast<std::size_t>(block_cycles) *
            static_cast<std::size_t>(config.samples_per_cycle);

        EmissionConfig pair_config = config;
        pair_config.seed = combine_seed(config.seed, fnv1a64(key.label()));

        for (int k = 0; k < examples_per_pair; ++k) {
            const Trace trace = emit(path, pair_config, k);
            const std::size_t n = trace.samples.size();
            if (start + length > n) {
                throw Error("segmentation out of bounds for pair " + key.label() +
                            ": cycle table inconsistent with trace length");
            }
            const std::size_t align =
                static_cast<std::size_t>(trace.alignment.value_or(0));
            SignalBlock block{key, {}, k};
            block.samples.resize(length);
            for (std::size_t j = 0; j < length; ++j) {
                block.samples[j] = trace.samples[(align + start + j) % n];
            }
            library.add_block(std::move(block));
        }
    }
    return library;
}

const SignalBlock& sample_block(const BlockLibrary& library, const PairKey& key,
                                std::mt19937_64& rng) {
    const std::vector<SignalBlock>& list = library.blocks(key);
    return list[uniform_below(rng, list.size())];
}

} // namespace emsynth
