#include "emsynth/archive.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "emsynth/errors.hpp"
#include "json.hpp"

namespace emsynth {

namespace {

constexpr int kSchemaVersion = 1;

nlohmann::json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad JSON in " + file.string() + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
    if (!out) throw IoError("write failed for " + file.string());
}

float parse_float(std::string_view token, const std::filesystem::path& file, int line) {
    float value = 0.0f;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw IoError(file.string() + ":" + std::to_string(line) +
                      ": bad float '" + std::string(token) + "'");
    }
    return value;
}

std::vector<std::vector<float>> read_csv_rows(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<std::vector<float>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<float> row;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            const std::string_view tok =
                std::string_view(line).substr(start, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - start);
            row.push_back(parse_float(tok, file, line_no));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void append_le32(std::string& out, std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xff000000u) >> 24) | ((v & 0x00ff0000u) >> 8) |
            ((v & 0x0000ff00u) << 8) | ((v & 0x000000ffu) << 24);
    }
    char bytes[4];
    std::memcpy(bytes, &v, 4);
    out.append(bytes, 4);
}

std::uint32_t take_le32(const char* p) {
    std::uint32_t v = 0;
    std::memcpy(&v, p, 4);
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xff000000u) >> 24) | ((v & 0x00ff0000u) >> 8) |
            ((v & 0x0000ff00u) << 8) | ((v & 0x000000ffu) << 24);
    }
    return v;
}

} // namespace

std::string float_to_string(float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("float formatting failed");
    return std::string(buf, ptr);
}

void write_trace_set(const std::filesystem::path& dir, const TraceSet& set) {
    if (set.traces.empty()) throw ParameterError("refusing to write an empty trace set");
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["kind"] = "trace_set";
    manifest["samples_per_cycle"] = set.samples_per_cycle;
    manifest["origin"] = std::string(to_string(set.origin));
    if (set.path_id) {
        manifest["path_id"] = *set.path_id;
    } else {
        manifest["path_id"] = nullptr;
    }
    manifest["program"] = set.program_name;
    manifest["nominal_cycles"] = set.nominal_cycles;
    manifest["count"] = set.traces.size();
    nlohmann::json alignments = nlohmann::json::array();
    for (const Trace& t : set.traces) {
        if (t.alignment) {
            alignments.push_back(*t.alignment);
        } else {
            alignments.push_back(nullptr);
        }
    }
    manifest["alignments"] = std::move(alignments);
    manifest["config_digest"] = set.config_digest;
    manifest["catalog_digest"] = set.catalog_digest;
    manifest["seed"] = set.seed;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::string csv;
    for (const Trace& t : set.traces) {
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (i) csv += ',';
            csv += float_to_string(t.samples[i]);
        }
        csv += '\n';
    }
    write_text_file(dir / "traces.csv", csv);
}

TraceSet read_trace_set(const std::filesystem::path& dir) {
    const nlohmann::json manifest = read_json_file(dir / "manifest.json");
    if (manifest.value("kind", "") != "trace_set") {
        throw IoError(dir.string() + " is not a trace-set archive");
    }

    TraceSet set;
    set.samples_per_cycle = manifest.at("samples_per_cycle").get<int>();
    auto origin = trace_origin_from_string(manifest.at("origin").get<std::string>());
    if (!origin) throw IoError("unknown trace origin in " + dir.string());
    set.origin = *origin;
    if (manifest.contains("path_id") && !manifest.at("path_id").is_null()) {
        set.path_id = manifest.at("path_id").get<int>();
    }
    set.program_name = manifest.value("program", "");
    set.nominal_cycles = manifest.at("nominal_cycles").get<int>();
    set.config_digest = manifest.value("config_digest", "");
    set.catalog_digest = manifest.value("catalog_digest", "");
    set.seed = manifest.value("seed", std::uint64_t{0});

    const auto rows = read_csv_rows(dir / "traces.csv");
    const auto& alignments = manifest.at("alignments");
    if (alignments.size() != rows.size() ||
        rows.size() != manifest.at("count").get<std::size_t>()) {
        throw IoError("trace count mismatch in " + dir.string());
    }
    set.traces.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Trace t;
        t.samples = rows[i];
        t.samples_per_cycle = set.samples_per_cycle;
        t.origin = set.origin;
        t.path_id = set.path_id;
        if (!alignments[i].is_null()) t.alignment = alignments[i].get<int>();
        set.traces.push_back(std::move(t));
    }
    return set;
}

TraceSet ingest_csv(const std::filesystem::path& csv,
                    const std::filesystem::path& triggers,
                    int samples_per_cycle, int nominal_cycles) {
    if (samples_per_cycle < 1) throw ParameterError("samples_per_cycle must be >= 1");
    if (nominal_cycles < 1) throw ParameterError("nominal_cycles must be >= 1");

    const auto rows = read_csv_rows(csv);
    if (rows.empty()) throw IoError("no traces in " + csv.string());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw IoError(csv.string() + ": row " + std::to_string(i + 1) +
                          " has a different sample count");
        }
    }

    std::ifstream trg(triggers);
    if (!trg) throw IoError("cannot open " + triggers.string());
    std::vector<int> trigger_indices;
    std::string line;
    int line_no = 0;
    while (std::getline(trg, line)) {
        ++line_no;
        if (line.empty()) continue;
        int value = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
        if (ec != std::errc() || ptr != line.data() + line.size()) {
            throw IoError(triggers.string() + ":" + std::to_string(line_no) +
                          ": bad trigger index '" + line + "'");
        }
        trigger_indices.push_back(value);
    }
    if (trigger_indices.size() != rows.size()) {
        throw IoError("trigger count does not match trace count");
    }

    TraceSet set;
    set.samples_per_cycle = samples_per_cycle;
    set.origin = TraceOrigin::ingested;
    set.nominal_cycles = nominal_cycles;
    set.traces.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (trigger_indices[i] < 0 ||
            static_cast<std::size_t>(trigger_indices[i]) >= rows[i].size()) {
            throw IoError("trigger index " + std::to_string(trigger_indices[i]) +
                          " out of range for trace " + std::to_string(i));
        }
        Trace t;
        t.samples = rows[i];
        t.samples_per_cycle = samples_per_cycle;
        t.origin = TraceOrigin::ingested;
        t.alignment = trigger_indices[i];
        set.traces.push_back(std::move(t));
    }
    return set;
}

void write_library(const std::filesystem::path& dir, const BlockLibrary& library) {
    std::filesystem::create_directories(dir / "blocks");

    nlohmann::json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["kind"] = "block_library";
    manifest["samples_per_cycle"] = library.samples_per_cycle();
    manifest["config_digest"] = library.config_digest();
    manifest["catalog_digest"] = library.catalog_digest();
    manifest["seed"] = library.seed();

    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [key, blocks] : library.entries()) {
        const std::string file = "blocks/" + key.prev + "__" + key.cur + ".f32";
        pairs.push_back({{"prev", key.prev},
                         {"cur", key.cur},
                         {"file", file},
                         {"block_length", blocks.front().samples.size()},
                         {"count", blocks.size()}});
        std::string raw;
        raw.reserve(blocks.size() * blocks.front().samples.size() * 4);
        for (const SignalBlock& block : blocks) {
            for (float v : block.samples) {
                append_le32(raw, std::bit_cast<std::uint32_t>(v));
            }
        }
        write_text_file(dir / file, raw);
    }
    manifest["pairs"] = std::move(pairs);
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

BlockLibrary read_library(const std::filesystem::path& dir) {
    const nlohmann::json manifest = read_json_file(dir / "manifest.json");
    if (manifest.value("kind", "") != "block_library") {
        throw IoError(dir.string() + " is not a block-library archive");
    }

    BlockLibrary library(manifest.at("samples_per_cycle").get<int>(),
                         manifest.value("config_digest", ""),
                         manifest.value("catalog_digest", ""),
                         manifest.value("seed", std::uint64_t{0}));
    for (const auto& entry : manifest.at("pairs")) {
        const PairKey key{entry.at("prev").get<std::string>(),
                          entry.at("cur").get<std::string>()};
        const std::size_t block_length = entry.at("block_length").get<std::size_t>();
        const std::size_t count = entry.at("count").get<std::size_t>();
        const std::filesystem::path file = dir / entry.at("file").get<std::string>();

        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot open " + file.string());
        std::string raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
        if (raw.size() != block_length * count * 4) {
            throw IoError("size mismatch in " + file.string());
        }
        for (std::size_t b = 0; b < count; ++b) {
            SignalBlock block{key, {}, static_cast<int>(b)};
            block.samples.resize(block_length);
            for (std::size_t j = 0; j < block_length; ++j) {
                block.samples[j] = std::bit_cast<float>(
                    take_le32(raw.data() + (b * block_length + j) * 4));
            }
            library.add_block(std::move(block));
        }
    }
    return library;
}

void write_baselines(const std::filesystem::path& file,
                     const std::vector<Baseline>& baselines) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "baselines";
    nlohmann::json list = nlohmann::json::array();
    for (const Baseline& b : baselines) {
        list.push_back({{"path_id", b.path_id},
                        {"kappa", b.kappa},
                        {"scores", b.scores},
                        {"source_size", b.source_size},
                        {"source_digest", b.source_digest}});
    }
    j["baselines"] = std::move(list);
    write_text_file(file, j.dump(2) + "\n");
}

std::vector<Baseline> read_baselines(const std::filesystem::path& file) {
    const nlohmann::json j = read_json_file(file);
    if (j.value("kind", "") != "baselines") {
        throw IoError(file.string() + " is not a baselines file");
    }
    std::vector<Baseline> baselines;
    for (const auto& entry : j.at("baselines")) {
        Baseline b;
        b.path_id = entry.at("path_id").get<int>();
        b.kappa = entry.at("kappa").get<int>();
        b.scores = entry.at("scores").get<std::vector<double>>();
        b.source_size = entry.value("source_size", std::size_t{0});
        b.source_digest = entry.value("source_digest", "");
        if (!std::is_sorted(b.scores.begin(), b.scores.end())) {
            throw IoError("baseline scores for path " + std::to_string(b.path_id) +
                          " are not sorted");
        }
        baselines.push_back(std::move(b));
    }
    return baselines;
}

} // namespace emsynth
