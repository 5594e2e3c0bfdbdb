#include "emsynth/device_sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "emsynth/errors.hpp"
#include "emsynth/rng.hpp"

namespace emsynth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fraction of the cycle occupied by the pulse. Keeping the pulse in the
// leading part of the window means a trigger that fires up to half a cycle
// early still leaves every per-cycle maximum in its own window.
constexpr double kPulseFill = 0.45;

int pulse_width(int samples_per_cycle) {
    const int w = static_cast<int>(std::lround(samples_per_cycle * kPulseFill));
    return std::max(1, std::min(w, samples_per_cycle));
}

std::uint64_t instruction_stream_salt(const ExecutionPath& path) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Instruction& instr : path.instructions) {
        h = fnv1a64(instr.mnemonic, h);
        h = fnv1a64_u64(static_cast<std::uint64_t>(instr.cycles), h);
    }
    return h;
}

} // namespace

std::vector<double> pulse_template(const std::string& shape, int samples_per_cycle) {
    const int w = pulse_width(samples_per_cycle);
    std::vector<double> pulse(static_cast<std::size_t>(samples_per_cycle), 0.0);
    for (int t = 0; t < w; ++t) {
        const double x = (t + 0.5) / w;
        if (shape == "half_sine") {
            pulse[t] = std::sin(kPi * x);
        } else if (shape == "triangle") {
            pulse[t] = 1.0 - std::abs(2.0 * x - 1.0);
        } else if (shape == "square") {
            pulse[t] = 1.0;
        } else {
            throw ConfigError("unknown pulse shape '" + shape + "'");
        }
    }
    return pulse;
}

EmissionConfig::EmissionConfig() {
    for (auto& row : influence) row.fill(1.0);
}

EmissionConfig EmissionConfig::defaults() {
    EmissionConfig config;
    config.base_amplitude = {
        {"add", 1.00}, {"adc", 1.03}, {"sub", 0.97}, {"sbc", 1.01},
        {"cp", 0.99},  {"lsl", 1.05}, {"lsr", 1.04}, {"asr", 1.06},
        {"and", 0.90}, {"eor", 0.94}, {"com", 0.93}, {"clr", 0.91},
        {"ses", 0.84}, {"cls", 0.80}, {"sev", 0.83}, {"clv", 0.81},
        {"ldi", 1.10}, {"mov", 1.12}, {"ser", 1.14},
        {"breq", 1.28}, {"rjmp", 1.33}, {"sbi", 1.45}, {"nop", 0.72},
    };
    // Class-level predecessor influence: factor = 1 + a(prev) * b(cur).
    // Classes performing similar work get nearby a-values so that swapping
    // same-class predecessors moves an amplitude only marginally, while
    // cross-class swaps are clearly visible.
    constexpr std::array<double, kOpClassCount> a = {
        0.10,  // arithmetic
        -0.08, // logic
        0.03,  // flag
        -0.05, // branch
        0.07,  // transfer
        0.14,  // io
        0.00,  // nop
    };
    constexpr std::array<double, kOpClassCount> b = {
        1.00, 0.90, 1.10, 1.00, 0.95, 1.05, 1.00,
    };
    for (int p = 0; p < kOpClassCount; ++p) {
        for (int c = 0; c < kOpClassCount; ++c) {
            config.influence[p][c] = 1.0 + a[p] * b[c];
        }
    }
    return config;
}

EmissionConfig EmissionConfig::from_json(const nlohmann::json& j) {
    EmissionConfig config = defaults();
    if (j.contains("samples_per_cycle")) config.samples_per_cycle = j.at("samples_per_cycle").get<int>();
    if (j.contains("pulse_shape")) config.pulse_shape = j.at("pulse_shape").get<std::string>();
    if (j.contains("base_amplitude")) {
        config.base_amplitude.clear();
        for (const auto& [mnemonic, value] : j.at("base_amplitude").items()) {
            config.base_amplitude[mnemonic] = value.get<double>();
        }
    }
    if (j.contains("influence")) {
        for (const auto& [prev_name, row] : j.at("influence").items()) {
            auto prev = op_class_from_string(prev_name);
            if (!prev) throw ConfigError("unknown op class '" + prev_name + "' in influence map");
            for (const auto& [cur_name, value] : row.items()) {
                auto cur = op_class_from_string(cur_name);
                if (!cur) throw ConfigError("unknown op class '" + cur_name + "' in influence map");
                config.influence[static_cast<int>(*prev)][static_cast<int>(*cur)] =
                    value.get<double>();
            }
        }
    }
    if (j.contains("influence_spread")) config.influence_spread = j.at("influence_spread").get<double>();
    if (j.contains("noise_sigma")) config.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("jitter_sigma")) config.jitter_sigma = j.at("jitter_sigma").get<double>();
    if (j.contains("drift_max")) config.drift_max = j.at("drift_max").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    config.validate();
    return config;
}

EmissionConfig EmissionConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad config JSON in " + file.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json EmissionConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["samples_per_cycle"] = samples_per_cycle;
    j["pulse_shape"] = pulse_shape;
    j["base_amplitude"] = base_amplitude;
    nlohmann::json infl;
    for (int p = 0; p < kOpClassCount; ++p) {
        nlohmann::json row;
        for (int c = 0; c < kOpClassCount; ++c) {
            row[std::string(to_string(static_cast<OpClass>(c)))] = influence[p][c];
        }
        infl[std::string(to_string(static_cast<OpClass>(p)))] = std::move(row);
    }
    j["influence"] = std::move(infl);
    j["influence_spread"] = influence_spread;
    j["noise_sigma"] = noise_sigma;
    j["jitter_sigma"] = jitter_sigma;
    j["drift_max"] = drift_max;
    j["seed"] = seed;
    return j;
}

void EmissionConfig::validate() const {
    if (samples_per_cycle < 1) throw ConfigError("samples_per_cycle must be >= 1");
    for (const auto& [mnemonic, amp] : base_amplitude) {
        if (!(amp > 0.0)) throw ConfigError("base amplitude for '" + mnemonic + "' must be > 0");
    }
    for (const auto& row : influence) {
        for (double f : row) {
            if (!(f > 0.0)) throw ConfigError("influence factors must be > 0");
        }
    }
    if (influence_spread < 0.0) throw ConfigError("influence_spread must be >= 0");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (jitter_sigma < 0.0) throw ConfigError("jitter_sigma must be >= 0");
    if (drift_max < 0) throw ConfigError("drift_max must be >= 0");
    if (drift_max >= samples_per_cycle) throw ConfigError("drift_max must be < samples_per_cycle");
    pulse_template(pulse_shape, samples_per_cycle); // rejects unknown shapes
}

double EmissionConfig::pair_spread(std::string_view prev, std::string_view cur) const {
    std::uint64_t h = fnv1a64(prev);
    h = fnv1a64("|", h);
    h = fnv1a64(cur, h);
    const double unit = static_cast<double>(mix64(h) >> 11) * 0x1.0p-53; // [0,1)
    return 1.0 + influence_spread * (2.0 * unit - 1.0);
}

double EmissionConfig::amplitude(std::string_view mnemonic) const {
    auto it = base_amplitude.find(std::string(mnemonic));
    if (it == base_amplitude.end()) {
        throw ConfigError("no base amplitude configured for mnemonic '" +
                          std::string(mnemonic) + "'");
    }
    return it->second;
}

std::string EmissionConfig::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json().dump())));
    return buf;
}

std::string_view to_string(TraceOrigin o) {
    switch (o) {
    case TraceOrigin::simulated: return "simulated";
    case TraceOrigin::synthetic: return "synthetic";
    case TraceOrigin::ingested: return "ingested";
    }
    return "simulated";
}

std::optional<TraceOrigin> trace_origin_from_string(std::string_view s) {
    if (s == "simulated") return TraceOrigin::simulated;
    if (s == "synthetic") return TraceOrigin::synthetic;
    if (s == "ingested") return TraceOrigin::ingested;
    return std::nullopt;
}

Trace emit(const ExecutionPath& path, const EmissionConfig& config,
           int capture_index) {
    config.validate();
    if (path.instructions.empty()) throw ParameterError("cannot emit an empty path");

    const int spc = config.samples_per_cycle;
    const std::vector<double> pulse = pulse_template(config.pulse_shape, spc);
    const std::size_t total = static_cast<std::size_t>(path.total_cycles()) *
                              static_cast<std::size_t>(spc);

    // Noise-free signal: per instruction, cycles * spc pulse copies scaled
    // by amplitude, predecessor-class influence and the pair perturbation.
    std::vector<double> clean;
    clean.reserve(total);
    const std::size_t n = path.instructions.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Instruction& cur = path.instructions[i];
        const Instruction& prev = path.instructions[(i + n - 1) % n];
        const double factor = config.amplitude(cur.mnemonic) *
                              config.influence_factor(prev.op_class, cur.op_class) *
                              config.pair_spread(prev.mnemonic, cur.mnemonic);
        for (int c = 0; c < cur.cycles; ++c) {
            for (int t = 0; t < spc; ++t) clean.push_back(pulse[t] * factor);
        }
    }

    std::mt19937_64 rng(combine_seed(
        combine_seed(config.seed, instruction_stream_salt(path)),
        static_cast<std::uint64_t>(capture_index)));
    const double jitter =
        config.jitter_sigma > 0.0 ? 1.0 + config.jitter_sigma * standard_normal(rng) : 1.0;
    const std::size_t shift =
        config.drift_max > 0
            ? uniform_below(rng, static_cast<std::uint64_t>(config.drift_max) + 1)
            : 0;

    Trace trace;
    trace.samples_per_cycle = spc;
    trace.origin = TraceOrigin::simulated;
    trace.path_id = path.path_id;
    trace.alignment = static_cast<int>(shift);
    trace.samples.resize(total);
    for (std::size_t t = 0; t < total; ++t) {
        double v = jitter * clean[(t + total - shift) % total];
        if (config.noise_sigma > 0.0) v += config.noise_sigma * standard_normal(rng);
        trace.samples[t] = static_cast<float>(v);
    }
    return trace;
}

std::vector<Trace> capture_set(const ExecutionPath& path,
                               const EmissionConfig& config, int n) {
    if (n < 1) throw ParameterError("capture count must be >= 1");
    std::vector<Trace> traces;
    traces.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) traces.push_back(emit(path, config, k));
    return traces;
}

} // namespace emsynth
