#pragma once

#include "nvsim/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

// Patterned resist: a finite square lattice of circular apertures.
// Geometry queries and the stochastic realization of an implantation dose.

namespace nvsim {

struct ApertureIndex {
    int row = 0;
    int col = 0;
    friend bool operator==(const ApertureIndex&, const ApertureIndex&) = default;
};

struct ApertureMask {
    double aperture_diameter_nm = 80.0;
    double pitch_nm = 2000.0;
    int rows = 7;
    int cols = 7;
    double resist_thickness_nm = 200.0;
    double origin_x_nm = 0.0; // center of aperture (0,0)
    double origin_y_nm = 0.0;

    void validate() const; // throws std::invalid_argument

    int aperture_count() const { return rows * cols; }
    int flat_index(ApertureIndex idx) const { return idx.row * cols + idx.col; }

    double center_x_nm(ApertureIndex idx) const { return origin_x_nm + idx.col * pitch_nm; }
    double center_y_nm(ApertureIndex idx) const { return origin_y_nm + idx.row * pitch_nm; }
};

struct EntryClass {
    bool open = false;
    ApertureIndex aperture; // valid only when open
};

// Open iff the position lies within diameter/2 of the nearest aperture center
// of the finite grid; anything outside the grid extent is masked.
EntryClass classify_entry(const ApertureMask& mask, double x_nm, double y_nm);

// fluence * pi (d/2)^2, fluence in ions/cm^2. Throws std::invalid_argument
// for negative fluence.
double expected_ions_per_aperture(const ApertureMask& mask, double fluence_per_cm2);

struct EntryPoint {
    ApertureIndex aperture;
    double x_nm = 0.0;
    double y_nm = 0.0;
};

// Dose realization: per-aperture counts are Poisson with mean
// expected_ions_per_aperture, entry points uniform over each open disc.
// Ordered by aperture (row-major), then by draw order. Deterministic per seed.
std::vector<EntryPoint> sample_entry_points(const ApertureMask& mask, double fluence_per_cm2,
                                            std::uint64_t seed);

// Same, but conditioned on a fixed total count (multinomial split over the
// apertures, which is exactly Poisson sampling conditioned on the total).
std::vector<EntryPoint> sample_entry_points_total(const ApertureMask& mask,
                                                  std::uint64_t total_ions, std::uint64_t seed);

} // namespace nvsim
