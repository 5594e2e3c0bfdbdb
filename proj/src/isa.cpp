#include "emsynth/isa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

namespace {

constexpr std::array<std::string_view, kOpClassCount> kOpClassNames = {
    "arithmetic", "logic", "flag", "branch", "transfer", "io", "nop"};

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

bool is_number(std::string_view s) {
    if (s.empty()) return false;
    if (s[0] == '-') s.remove_prefix(1);
    if (s.empty()) return false;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        return std::all_of(s.begin() + 2, s.end(),
                           [](unsigned char c) { return std::isxdigit(c); });
    }
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

// Operand tokens: registers r0..r31, integer immediates, or identifiers
// (port names, branch labels).
bool valid_operand(std::string_view s) {
    if (s.size() >= 2 && (s[0] == 'r' || s[0] == 'R') &&
        std::all_of(s.begin() + 1, s.end(),
                    [](unsigned char c) { return std::isdigit(c); })) {
        int n = 0;
        for (char c : s.substr(1)) n = n * 10 + (c - '0');
        return n <= 31;
    }
    return is_number(s) || is_identifier(s);
}

// The default catalog. Cycle counts follow the AVR datasheet for this
// subset: single-cycle ALU/flag/transfer ops, two-cycle sbi and rjmp,
// breq 1 (2 taken). The fourth column marks conditional branches.
constexpr std::string_view kAvrSubsetCsv =
    "# mnemonic,cycles,op_class[,taken_cycles]\n"
    "add,1,arithmetic\n"
    "adc,1,arithmetic\n"
    "sub,1,arithmetic\n"
    "sbc,1,arithmetic\n"
    "cp,1,arithmetic\n"
    "lsl,1,arithmetic\n"
    "lsr,1,arithmetic\n"
    "asr,1,arithmetic\n"
    "and,1,logic\n"
    "eor,1,logic\n"
    "com,1,logic\n"
    "clr,1,logic\n"
    "ses,1,flag\n"
    "cls,1,flag\n"
    "sev,1,flag\n"
    "clv,1,flag\n"
    "ldi,1,transfer\n"
    "mov,1,transfer\n"
    "ser,1,transfer\n"
    "breq,1,branch,2\n"
    "rjmp,2,branch\n"
    "sbi,2,io\n"
    "nop,1,nop\n";

} // namespace

std::string_view to_string(OpClass c) {
    return kOpClassNames[static_cast<int>(c)];
}

std::optional<OpClass> op_class_from_string(std::string_view s) {
    for (int i = 0; i < kOpClassCount; ++i) {
        if (kOpClassNames[i] == s) return static_cast<OpClass>(i);
    }
    return std::nullopt;
}

Catalog Catalog::from_csv(std::string_view text) {
    Catalog catalog;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            fields.emplace_back(trim(line.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() < 3 || fields.size() > 4) {
            throw ParseError("catalog row needs mnemonic,cycles,op_class[,taken_cycles]", line_no);
        }

        CatalogEntry entry;
        entry.mnemonic = to_lower(fields[0]);
        if (!is_identifier(entry.mnemonic)) {
            throw ParseError("bad mnemonic '" + fields[0] + "'", line_no);
        }
        try {
            entry.cycles = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw ParseError("bad cycle count '" + fields[1] + "'", line_no);
        }
        if (entry.cycles < 1) throw ParseError("cycle count must be >= 1", line_no);
        auto cls = op_class_from_string(fields[2]);
        if (!cls) throw ParseError("unknown op class '" + fields[2] + "'", line_no);
        entry.op_class = *cls;
        if (fields.size() == 4) {
            int taken = 0;
            try {
                taken = std::stoi(fields[3]);
            } catch (const std::exception&) {
                throw ParseError("bad taken cycle count '" + fields[3] + "'", line_no);
            }
            if (taken < 1) throw ParseError("taken cycle count must be >= 1", line_no);
            if (entry.op_class != OpClass::branch) {
                throw ParseError("taken_cycles only applies to branch mnemonics", line_no);
            }
            entry.taken_cycles = taken;
        }
        if (!catalog.entries_.emplace(entry.mnemonic, entry).second) {
            throw ParseError("duplicate mnemonic '" + entry.mnemonic + "'", line_no);
        }
    }
    if (catalog.entries_.empty()) throw Error("catalog is empty");
    return catalog;
}

Catalog Catalog::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open catalog file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv(buf.str());
}

const Catalog& Catalog::avr_subset() {
    static const Catalog catalog = from_csv(kAvrSubsetCsv);
    return catalog;
}

const CatalogEntry* Catalog::find(std::string_view mnemonic) const {
    auto it = entries_.find(mnemonic);
    return it == entries_.end() ? nullptr : &it->second;
}

const CatalogEntry& Catalog::entry(std::string_view mnemonic) const {
    if (const CatalogEntry* e = find(mnemonic)) return *e;
    throw CatalogError("unknown mnemonic '" + std::string(mnemonic) + "'");
}

std::vector<std::string> Catalog::mnemonics() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::string Catalog::to_csv() const {
    std::string out;
    for (const auto& [name, e] : entries_) {
        out += name + ',' + std::to_string(e.cycles) + ',' +
               std::string(to_string(e.op_class));
        if (e.taken_cycles) out += ',' + std::to_string(*e.taken_cycles);
        out += '\n';
    }
    return out;
}

std::string Catalog::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_csv())));
    return buf;
}

Instruction make_instruction(const Catalog& catalog, std::string_view mnemonic,
                             std::vector<std::string> operands) {
    const CatalogEntry& e = catalog.entry(to_lower(mnemonic));
    return Instruction{e.mnemonic, std::move(operands), e.cycles, e.op_class};
}

std::optional<std::size_t> Program::label_index(std::string_view name) const {
    for (const auto& [label, index] : labels) {
        if (label == name) return index;
    }
    return std::nullopt;
}

int Program::loop_cycles() const {
    return std::accumulate(loop_body.begin(), loop_body.end(), 0,
                           [](int acc, const Instruction& i) { return acc + i.cycles; });
}

int ExecutionPath::total_cycles() const {
    return std::accumulate(instructions.begin(), instructions.end(), 0,
                           [](int acc, const Instruction& i) { return acc + i.cycles; });
}

Program parse_program(std::string_view source, const Catalog& catalog,
                      std::string_view name) {
    Program program;
    program.name = name;

    bool in_setup = false;
    bool saw_loop_label = false;
    std::vector<int> body_lines; // source line per loop_body instruction
    std::vector<std::pair<std::string, int>> pending_labels;

    std::istringstream in{std::string(source)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto semi = line.find(';'); semi != std::string_view::npos) {
            line = line.substr(0, semi);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.back() == ':') {
            std::string label = to_lower(trim(line.substr(0, line.size() - 1)));
            if (!is_identifier(label)) {
                throw ParseError("bad label '" + std::string(line) + "'", line_no);
            }
            if (label == "setup") {
                if (saw_loop_label || !program.setup.empty() || !program.loop_body.empty()) {
                    throw ParseError("setup section must come first", line_no);
                }
                in_setup = true;
            } else if (label == "loop") {
                if (saw_loop_label) throw ParseError("duplicate label 'loop'", line_no);
                saw_loop_label = true;
                in_setup = false;
            } else {
                if (in_setup) {
                    throw ParseError("label '" + label + "' not allowed in setup section", line_no);
                }
                const bool pending_dup =
                    std::any_of(pending_labels.begin(), pending_labels.end(),
                                [&](const auto& p) { return p.first == label; });
                if (pending_dup || program.label_index(label)) {
                    throw ParseError("duplicate label '" + label + "'", line_no);
                }
                pending_labels.emplace_back(label, line_no);
            }
            continue;
        }

        // Instruction line: mnemonic, then comma-separated operands.
        auto ws = line.find_first_of(" \t");
        std::string mnemonic = to_lower(line.substr(0, ws));
        std::vector<std::string> operands;
        if (ws != std::string_view::npos) {
            std::string_view rest = trim(line.substr(ws));
            if (!rest.empty()) {
                std::size_t start = 0;
                while (true) {
                    auto comma = rest.find(',', start);
                    std::string tok{trim(rest.substr(start, comma - start))};
                    if (tok.empty() || !valid_operand(tok)) {
                        throw ParseError("malformed operand '" + tok + "'", line_no);
                    }
                    operands.push_back(to_lower(tok));
                    if (comma == std::string_view::npos) break;
                    start = comma + 1;
                }
            }
        }

        Instruction instr;
        try {
            instr = make_instruction(catalog, mnemonic, std::move(operands));
        } catch (const CatalogError& e) {
            throw ParseError(e.what(), line_no);
        }

        if (in_setup) {
            if (!pending_labels.empty()) {
                throw ParseError("label '" + pending_labels.front().first +
                                     "' not allowed in setup section",
                                 pending_labels.front().second);
            }
            program.setup.push_back(std::move(instr));
        } else {
            for (auto& [label, _] : pending_labels) {
                program.labels.emplace_back(label, program.loop_body.size());
            }
            pending_labels.clear();
            program.loop_body.push_back(std::move(instr));
            body_lines.push_back(line_no);
        }
    }

    if (!pending_labels.empty()) {
        throw ParseError("label '" + pending_labels.front().first +
                             "' points past the end of the loop body",
                         pending_labels.front().second);
    }
    if (in_setup && !saw_loop_label) {
        throw ParseError("setup section requires a loop label", line_no);
    }
    if (program.loop_body.empty()) {
        throw Error("program '" + program.name + "' has an empty loop body");
    }
    program.labels.insert(program.labels.begin(), {"loop", 0});

    // Branch targets must resolve to loop-body labels.
    for (std::size_t i = 0; i < program.loop_body.size(); ++i) {
        const Instruction& instr = program.loop_body[i];
        if (instr.op_class != OpClass::branch) continue;
        if (instr.operands.empty()) {
            throw ParseError("branch '" + instr.mnemonic + "' needs a target label",
                             body_lines[i]);
        }
        const std::string& target = instr.operands.back();
        if (!program.label_index(target)) {
            throw ParseError("unresolved label '" + target + "'", body_lines[i]);
        }
    }
    return program;
}

std::string render_program(const Program& program) {
    std::string out;
    auto emit = [&out](const Instruction& instr) {
        out += "    " + instr.mnemonic;
        for (std::size_t i = 0; i < instr.operands.size(); ++i) {
            out += i == 0 ? " " : ", ";
            out += instr.operands[i];
        }
        out += '\n';
    };

    if (!program.setup.empty()) {
        out += "setup:\n";
        for (const Instruction& instr : program.setup) emit(instr);
    }
    out += "loop:\n";
    for (std::size_t i = 0; i < program.loop_body.size(); ++i) {
        for (const auto& [label, index] : program.labels) {
            if (index == i && label != "loop") out += label + ":\n";
        }
        emit(program.loop_body[i]);
    }
    return out;
}

namespace {

std::string path_signature(const std::vector<Instruction>& seq) {
    std::string sig;
    for (const Instruction& instr : seq) {
        sig += instr.mnemonic;
        for (const std::string& op : instr.operands) sig += ' ' + op;
        sig += '/' + std::to_string(instr.cycles) + ';';
    }
    return sig;
}

std::vector<Instruction> walk_path(const Program& program, const Catalog& catalog,
                                   const BranchResolutions& outcomes) {
    std::vector<Instruction> seq;
    const std::size_t limit = program.loop_body.size() * 4 + 16;
    std::size_t i = 0;
    while (true) {
        if (seq.size() > limit) {
            throw Error("program '" + program.name +
                        "' does not return to the loop start");
        }
        Instruction instr = program.loop_body[i];
        const CatalogEntry& entry = catalog.entry(instr.mnemonic);
        std::size_t next = i + 1;

        if (entry.conditional_branch()) {
            const bool taken = outcomes.at(i) == BranchOutcome::taken;
            if (taken) {
                instr.cycles = *entry.taken_cycles;
                next = *program.label_index(instr.operands.back());
            }
            seq.push_back(std::move(instr));
        } else if (instr.op_class == OpClass::branch) {
            next = *program.label_index(instr.operands.back());
            seq.push_back(std::move(instr));
        } else {
            seq.push_back(std::move(instr));
        }

        if (next == 0 || next >= program.loop_body.size()) break; // iteration closed
        i = next;
    }
    return seq;
}

} // namespace

std::vector<ExecutionPath> flatten_paths(const Program& program,
                                         const Catalog& catalog,
                                         const BranchResolutions& resolutions,
                                         std::size_t max_paths) {
    std::vector<std::size_t> sites;
    for (std::size_t i = 0; i < program.loop_body.size(); ++i) {
        if (catalog.entry(program.loop_body[i].mnemonic).conditional_branch()) {
            sites.push_back(i);
        }
    }

    std::vector<BranchResolutions> combos;
    if (!resolutions.empty()) {
        for (const auto& [site, _] : resolutions) {
            if (std::find(sites.begin(), sites.end(), site) == sites.end()) {
                throw ParameterError("branch resolution for index " +
                                     std::to_string(site) +
                                     " does not name a conditional branch");
            }
        }
        for (std::size_t site : sites) {
            if (!resolutions.count(site)) {
                throw ParameterError("missing branch resolution for loop index " +
                                     std::to_string(site));
            }
        }
        combos.push_back(resolutions);
    } else {
        if (sites.size() < 64 && (std::size_t{1} << sites.size()) > max_paths) {
            throw ParameterError("program has " + std::to_string(sites.size()) +
                                 " conditional branches; enumeration exceeds the cap of " +
                                 std::to_string(max_paths) + " paths");
        }
        const std::size_t count = std::size_t{1} << sites.size();
        for (std::size_t mask = 0; mask < count; ++mask) {
            BranchResolutions combo;
            for (std::size_t b = 0; b < sites.size(); ++b) {
                combo[sites[b]] = (mask >> b) & 1 ? BranchOutcome::taken
                                                  : BranchOutcome::not_taken;
            }
            combos.push_back(std::move(combo));
        }
    }

    std::vector<ExecutionPath> paths;
    std::set<std::string> seen;
    for (const BranchResolutions& combo : combos) {
        std::vector<Instruction> seq = walk_path(program, catalog, combo);
        if (!seen.insert(path_signature(seq)).second) continue;
        paths.push_back(ExecutionPath{program.name,
                                      static_cast<int>(paths.size()),
                                      std::move(seq)});
    }
    return paths;
}

ExecutionPath inject(const ExecutionPath& path, std::size_t position,
                     const std::vector<Instruction>& payload) {
    if (position > path.instructions.size()) {
        throw ParameterError("injection position " + std::to_string(position) +
                             " is out of range for a path of " +
                             std::to_string(path.instructions.size()) +
                             " instructions");
    }
    ExecutionPath out = path;
    out.instructions.insert(out.instructions.begin() + static_cast<std::ptrdiff_t>(position),
                            payload.begin(), payload.end());
    return out;
}

} // namespace emsynth
