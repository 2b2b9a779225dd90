#pragma once

#include "nvsim/formation.hpp"
#include "nvsim/mask.hpp"

#include <cstdint>
#include <vector>

namespace nvsim {

// Synthetic confocal raster scans of emitter populations and spot detection
// on the resulting images.

struct ImagingConfig {
    double psf_sigma_nm = 130.0;   // lateral Gaussian collection profile
    double pixel_size_nm = 100.0;
    double background_cps = 62500.0; // uniform rate; default single-emitter rate / 4
    double dwell_time_s = 0.01;      // per-pixel integration, sets the shot noise scale
    bool dwell_noise = true;
    double margin_nm = 800.0;        // border added around the mask footprint
    double detect_threshold = 2.0;   // detection level in multiples of background
};

// Scanned rectangle, in the sample plane.
struct ScanExtent {
    double x0_nm = 0, y0_nm = 0;
    double x1_nm = 0, y1_nm = 0;
};

// mask footprint (outer aperture centers) grown by margin on every side
ScanExtent mask_extent(const ApertureMask& mask, double margin_nm);

struct ScanImage {
    int width = 0, height = 0;
    double pixel_size_nm = 0;
    double origin_x_nm = 0, origin_y_nm = 0; // center of pixel (0, 0)
    double background_cps = 0;
    double psf_sigma_nm = 0; // stamped by the renderer, used for flux recovery
    std::vector<double> rate_cps; // row-major count rates, height rows by width cols

    double at(int ix, int iy) const { return rate_cps[static_cast<std::size_t>(iy) * width + ix]; }
    double pixel_x_nm(int ix) const { return origin_x_nm + ix * pixel_size_nm; }
    double pixel_y_nm(int iy) const { return origin_y_nm + iy * pixel_size_nm; }
};

// Each emitter deposits brightness * exp(-r^2 / 2 sigma^2) at every pixel
// center (lateral distance only), on top of a uniform background. With
// dwell_noise the per-pixel rate is replaced by a Poisson draw of the dwell
// counts scaled back to a rate; pixels are visited in row-major order from a
// single stream, so the image is deterministic per seed.
ScanImage render_scan(const std::vector<SpotPopulation>& populations, const ImagingConfig& config,
                      const ScanExtent& extent, std::uint64_t seed);

struct DetectedSpot {
    double x_nm = 0, y_nm = 0; // centroid
    double peak_cps = 0;       // background-subtracted peak pixel rate
    double flux_cps = 0;       // background-subtracted total emitter rate estimate
};

// Local maxima over a 3x3 neighborhood above threshold*background, refined to
// a background-subtracted 3x3 centroid. flux_cps integrates the surrounding
// window and divides out the PSF volume, which recovers the summed emitter
// rate independent of sub-pixel position. Sorted row-major (y, then x).
// threshold must exceed 1 (the background itself must never trigger).
std::vector<DetectedSpot> detect_spots(const ScanImage& image, double threshold);

// Lattice pitch estimate from detected spots: positions are clustered into
// rows and columns, adjacent cluster gaps are divided by the number of
// lattice steps they span, and the surviving gap samples are averaged.
// Requires at least two rows or two columns of spots.
double estimate_pitch(const std::vector<DetectedSpot>& spots);

// fraction of mask sites with no detected spot within match_radius of the
// site center
double empty_fraction(const std::vector<DetectedSpot>& spots, const ApertureMask& mask,
                      double match_radius_nm);

} // namespace nvsim
