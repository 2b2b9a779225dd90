#pragma once

#include "nvsim/analysis.hpp"
#include "nvsim/formation.hpp"
#include "nvsim/imaging.hpp"
#include "nvsim/mask.hpp"
#include "nvsim/transport.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvsim {

// One text file drives the whole pipeline: INI-style sections, strict key
// registry (unknown keys are errors, never ignored), and a canonical
// serializer whose output parses back to an identical config.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunSection {
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string out_dir = "out";
};

struct HbtSection {
    bool enabled = true;
    double duration_s = 1.0;
    double excited_lifetime_ns = 12.0;
    double pump_rate_per_ns = 0.025;
    double background_cps = 62500.0;
    double bin_width_ns = 1.0;
    double max_tau_ns = 200.0;
    double jitter_sigma_ns = 0.0;
};

struct AnalysisSection {
    EstimateMethod method = EstimateMethod::combined;
    double single_emitter_cps = 250000.0;
    bool derive_single = false; // bootstrap the single-emitter level from certified singles
};

struct PipelineConfig {
    RunSection run;
    ApertureMask mask;
    double fluence_per_cm2 = 1e12;
    double molecule_energy_kev = 40.0;
    TransportConfig transport;
    int masked_check_histories = 10000; // resist-blocking verification sample
    YieldModel yield;
    ImagingConfig imaging;
    HbtSection hbt;
    AnalysisSection analysis;
};

struct ParseReport {
    PipelineConfig config;
    std::vector<std::string> provided_keys;  // "section.key", file order
    std::vector<std::string> defaulted_keys; // registry order
};

// Throws ConfigError with "source:line: message" on any syntax error,
// unknown section or key, duplicate key, or malformed value.
ParseReport parse_config(const std::string& text, const std::string& source_name);
ParseReport parse_config_file(const std::string& path);

// canonical text: registry order, one "key = value" per line, shortest
// round-trip number formatting
std::string serialize_config(const PipelineConfig& config);

// the full key registry, "section.key" in canonical order
const std::vector<std::string>& config_key_registry();

} // namespace nvsim
