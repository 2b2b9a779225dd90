#pragma once

#include "nvsim/analysis.hpp"
#include "nvsim/formation.hpp"
#include "nvsim/imaging.hpp"
#include "nvsim/mask.hpp"
#include "nvsim/photonics.hpp"
#include "nvsim/transport.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nvsim::io {

// CSV and graymap artifacts. Numbers are written in shortest round-trip
// form, so reading a file back reproduces the exact doubles that were
// written; the staged pipeline's byte-for-byte contract rests on this.

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// species,aperture_row,aperture_col,x_nm,y_nm,z_nm,in_resist
void write_implant_csv(const std::string& path, const std::vector<RestPosition>& rests,
                       const ApertureMask& mask);
std::vector<RestPosition> read_implant_csv(const std::string& path, const ApertureMask& mask);

// aperture_row,aperture_col,x_nm,y_nm,z_nm
void write_vacancies_csv(const std::string& path, const std::vector<VacancySite>& sites,
                         const ApertureMask& mask);
std::vector<VacancySite> read_vacancies_csv(const std::string& path, const ApertureMask& mask);

// aperture_row,aperture_col,x_nm,y_nm,z_nm,charge,brightness_cps; one
// population per mask site on read, empties included
void write_spots_csv(const std::string& path, const std::vector<SpotPopulation>& populations,
                     const ApertureMask& mask);
std::vector<SpotPopulation> read_spots_csv(const std::string& path, const ApertureMask& mask);

// matrix of count rates, one image row per line
void write_scan_csv(const std::string& path, const ScanImage& image);

// 16-bit binary PGM scaled to the image maximum
void write_scan_pgm(const std::string& path, const ScanImage& image);

// x_nm,y_nm,peak_cps,flux_cps
void write_detections_csv(const std::string& path, const std::vector<DetectedSpot>& spots);
std::vector<DetectedSpot> read_detections_csv(const std::string& path);

// Correlation histogram with its provenance; the corrected curve and fit are
// stored alongside so the file is self-describing.
struct G2Record {
    int row = -1, col = -1;
    CorrelationHistogram histogram;
    double signal_cps = 0;
    double background_cps = 0;
    double duration_ns = 0;
};

// header comments carry normalization, rho, rates, duration, and the fit;
// columns: tau_ns,counts,corrected,error
void write_g2_csv(const std::string& path, const G2Record& record, const G2Curve& curve);
G2Record read_g2_csv(const std::string& path);

// time_ns,detector with stream metadata in header comments; detector is 0
// (A) or 1 (B). The reader accepts plain two-column files from external
// hardware: metadata defaults to zero and can be supplied downstream.
void write_timestamps_csv(const std::string& path, const PhotonEventStream& stream);
PhotonEventStream read_timestamps_csv(const std::string& path);

std::string format_double(double v);

} // namespace nvsim::io
