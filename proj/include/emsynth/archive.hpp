#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emsynth/block_library.hpp"
#include "emsynth/detector.hpp"
#include "emsynth/device_sim.hpp"

namespace emsynth {

// A set of traces captured or synthesized for one execution path, together
// with the provenance needed to reuse them. On disk: a directory holding
// manifest.json plus traces.csv (one trace per row, shortest round-trip
// float formatting).
struct TraceSet {
    std::vector<Trace> traces;
    int samples_per_cycle = 0;
    TraceOrigin origin = TraceOrigin::simulated;
    std::optional<int> path_id;
    std::string program_name;
    int nominal_cycles = 0;
    std::string config_digest;
    std::string catalog_digest;
    std::uint64_t seed = 0;
};

void write_trace_set(const std::filesystem::path& dir, const TraceSet& set);
TraceSet read_trace_set(const std::filesystem::path& dir);

// External capture ingestion: a CSV of raw traces (one per row) plus a
// sidecar with one trigger index per row marking the loop start.
TraceSet ingest_csv(const std::filesystem::path& csv,
                    const std::filesystem::path& triggers,
                    int samples_per_cycle, int nominal_cycles);

// Block library archive: manifest.json plus one little-endian float32 file
// per pair under blocks/, block-major layout.
void write_library(const std::filesystem::path& dir, const BlockLibrary& library);
BlockLibrary read_library(const std::filesystem::path& dir);

// Baselines file: path_id, kappa and the ascending score list per path.
void write_baselines(const std::filesystem::path& file,
                     const std::vector<Baseline>& baselines);
std::vector<Baseline> read_baselines(const std::filesystem::path& file);

// Shortest representation that parses back to the identical float.
std::string float_to_string(float v);

} // namespace emsynth
