#pragma once

#include "nvsim/config.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvsim {

// Staged execution. Every stage reads its inputs from files in run.out_dir
// and writes its outputs back there, so a full run and the equivalent chain
// of single-stage invocations produce byte-identical artifacts.

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunContext {
    ParseReport report;
    std::optional<std::uint64_t> histories_override; // fixed total ion-pair count
    std::vector<std::string> cli_overrides;          // "section.key = value", applied order

    const PipelineConfig& config() const { return report.config; }
};

// dose sampling + ion transport -> implant.csv, vacancies.csv, implant_stats.json
void stage_implant(const RunContext& ctx);

// center formation -> spots.csv
void stage_form(const RunContext& ctx);

// confocal raster + spot detection -> scan.csv, scan.pgm, detections.csv
void stage_scan(const RunContext& ctx);

// photon correlation per occupied site -> g2/g2_r<row>_c<col>.csv
void stage_hbt(const RunContext& ctx);

// spot-to-site matching, count estimates, array statistics -> summary.json
void stage_analyze(const RunContext& ctx);

// all stages in order; the correlation stage is skipped when hbt is disabled
void run_pipeline(const RunContext& ctx);

namespace artifacts {
inline constexpr const char* metadata = "metadata.json";
inline constexpr const char* implant = "implant.csv";
inline constexpr const char* vacancies = "vacancies.csv";
inline constexpr const char* implant_stats = "implant_stats.json";
inline constexpr const char* spots = "spots.csv";
inline constexpr const char* scan_csv = "scan.csv";
inline constexpr const char* scan_pgm = "scan.pgm";
inline constexpr const char* detections = "detections.csv";
inline constexpr const char* g2_dir = "g2";
inline constexpr const char* summary = "summary.json";
} // namespace artifacts

std::string g2_filename(int row, int col);

} // namespace nvsim
