#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emsynth/isa.hpp"
#include "json.hpp"

namespace emsynth {

// Parametric model of the target device plus capture rig. Every knob is
// data; see assets/configs/*.json for the shipped instances.
struct EmissionConfig {
    int samples_per_cycle = 31;
    // Per-cycle waveform template: "half_sine" (default), "triangle" or
    // "square". All three place the pulse in the leading part of the cycle
    // so that sub-cycle drift leaves the per-cycle maximum intact.
    std::string pulse_shape = "half_sine";
    std::map<std::string, double> base_amplitude; // mnemonic -> > 0
    // Multiplicative factor applied to an instruction's amplitude depending
    // on the op class of its immediate predecessor.
    std::array<std::array<double, kOpClassCount>, kOpClassCount> influence;
    // Half-width of the deterministic per-mnemonic-pair perturbation around
    // the class-level factor.
    double influence_spread = 0.01;
    double noise_sigma = 0.03;   // additive white noise, signal units
    double jitter_sigma = 0.02;  // multiplicative gain jitter, one draw per capture
    int drift_max = 3;           // max circular shift per capture, samples
    std::uint64_t seed = 24601;

    EmissionConfig();

    // Full default model for the built-in AVR subset catalog.
    static EmissionConfig defaults();
    static EmissionConfig from_json(const nlohmann::json& j);
    static EmissionConfig load(const std::filesystem::path& file);
    nlohmann::json to_json() const;

    void validate() const; // throws ConfigError

    double influence_factor(OpClass prev, OpClass cur) const {
        return influence[static_cast<int>(prev)][static_cast<int>(cur)];
    }
    // Deterministic per-pair perturbation in [1-spread, 1+spread].
    double pair_spread(std::string_view prev, std::string_view cur) const;
    double amplitude(std::string_view mnemonic) const; // throws ConfigError

    std::string digest() const;
};

// Per-cycle waveform template, length samples_per_cycle, peak ~1.
std::vector<double> pulse_template(const std::string& shape, int samples_per_cycle);

enum class TraceOrigin { simulated, synthetic, ingested };

std::string_view to_string(TraceOrigin o);
std::optional<TraceOrigin> trace_origin_from_string(std::string_view s);

// One EM signal: amplitude samples plus sampling metadata.
struct Trace {
    std::vector<float> samples;
    int samples_per_cycle = 0;
    TraceOrigin origin = TraceOrigin::simulated;
    std::optional<int> path_id;
    std::optional<int> alignment; // sample offset of the loop start

    bool operator==(const Trace&) const = default;
};

// Emits one capture of the looped path. Deterministic in
// (path, config, capture_index): the sample stream is seeded from the
// config seed, the path's instruction signature and the capture index.
// The first instruction takes its predecessor from the end of the loop.
Trace emit(const ExecutionPath& path, const EmissionConfig& config,
           int capture_index);

// n captures with capture_index 0..n-1.
std::vector<Trace> capture_set(const ExecutionPath& path,
                               const EmissionConfig& config, int n);

} // namespace emsynth
