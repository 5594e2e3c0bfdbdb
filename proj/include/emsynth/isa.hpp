#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace emsynth {

enum class OpClass { arithmetic, logic, flag, branch, transfer, io, nop };

inline constexpr int kOpClassCount = 7;

std::string_view to_string(OpClass c);
std::optional<OpClass> op_class_from_string(std::string_view s);

struct CatalogEntry {
    std::string mnemonic;
    int cycles = 1;
    OpClass op_class = OpClass::nop;
    // Cycle count when a branch is taken. Presence marks the mnemonic as a
    // conditional branch; unconditional branches (rjmp) leave it empty.
    std::optional<int> taken_cycles;

    bool conditional_branch() const { return taken_cycles.has_value(); }
};

// The supported-instruction table. Data-driven: rows are
// "mnemonic,cycles,op_class[,taken_cycles]", '#' comments allowed.
class Catalog {
public:
    static Catalog from_csv(std::string_view text);
    static Catalog load(const std::filesystem::path& file);
    // Built-in AVR subset used throughout the shipped programs.
    static const Catalog& avr_subset();

    const CatalogEntry& entry(std::string_view mnemonic) const;
    const CatalogEntry* find(std::string_view mnemonic) const;
    bool contains(std::string_view mnemonic) const { return find(mnemonic) != nullptr; }
    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> mnemonics() const; // sorted

    std::string to_csv() const;
    std::string digest() const;

private:
    std::map<std::string, CatalogEntry, std::less<>> entries_;
};

struct Instruction {
    std::string mnemonic;
    std::vector<std::string> operands;
    int cycles = 1;
    OpClass op_class = OpClass::nop;

    bool operator==(const Instruction&) const = default;
};

// Builds an Instruction from the catalog; throws CatalogError for unknown
// mnemonics. Cycle count is the catalog base value.
Instruction make_instruction(const Catalog& catalog, std::string_view mnemonic,
                             std::vector<std::string> operands = {});

struct Program {
    std::string name;
    std::vector<Instruction> setup;
    std::vector<Instruction> loop_body;
    // Label -> loop_body index, in definition order. Always contains
    // ("loop", 0).
    std::vector<std::pair<std::string, std::size_t>> labels;

    std::optional<std::size_t> label_index(std::string_view name) const;
    int loop_cycles() const;

    bool operator==(const Program&) const = default;
};

// One branch-resolved instruction sequence for a single loop iteration.
struct ExecutionPath {
    std::string program_name;
    int path_id = 0;
    std::vector<Instruction> instructions;

    int total_cycles() const;
};

// Parses assembly source: one instruction per line, "label:" lines,
// ';' comments. Instructions before a "loop:" label form the setup
// section (only a "setup:" label may precede it).
Program parse_program(std::string_view source, const Catalog& catalog,
                      std::string_view name = "");

std::string render_program(const Program& program);

enum class BranchOutcome { not_taken, taken };

// Map from loop_body index of a conditional branch to its outcome.
using BranchResolutions = std::map<std::size_t, BranchOutcome>;

// Flattens the loop body into execution paths. With resolutions given they
// must cover every conditional branch and exactly one path is produced;
// without them all outcomes are enumerated (deduplicated, capped at
// max_paths). Taken conditional branches carry their taken cycle count.
std::vector<ExecutionPath> flatten_paths(const Program& program,
                                         const Catalog& catalog,
                                         const BranchResolutions& resolutions = {},
                                         std::size_t max_paths = 256);

// Splices payload into a copy of the path at `position` (0..size).
ExecutionPath inject(const ExecutionPath& path, std::size_t position,
                     const std::vector<Instruction>& payload);

} // namespace emsynth
