#pragma once

#include "nvsim/rng.hpp"
#include "nvsim/transport.hpp"

#include <cstdint>
#include <vector>

namespace nvsim {

// Stochastic conversion of implanted nitrogen into fluorescent centers.

struct YieldModel {
    double base_yield = 0.07;        // conversion probability per rested nitrogen
    double vacancy_boost = 0.0;      // relative boost per vacancy within the radius
    double vacancy_radius_nm = 10.0; // neighborhood used when the boost is on
    double nv_minus_fraction = 0.9;  // remainder forms the neutral charge state
    double brightness_cps = 250000.0; // median detected rate of one emitter
    double brightness_sigma = 0.10;   // sigma of the log-normal spread
};

enum class ChargeState { nv_minus, nv_neutral };

struct Emitter {
    double x_nm = 0, y_nm = 0, z_nm = 0;
    ChargeState charge = ChargeState::nv_minus;
    double brightness_cps = 0;
};

struct SpotPopulation {
    int aperture = -1; // flat site index
    std::vector<Emitter> emitters;
};

// Bernoulli trial per nitrogen rest in the substrate; on success the emitter
// inherits the rest position. With vacancy_boost > 0 the acceptance
// probability becomes clamp(base * (1 + boost * local_vacancies), 0, 1),
// which requires recorded vacancy positions. Returns one population per
// site, empty ones included. Deterministic per seed, independent of how the
// implant was threaded.
std::vector<SpotPopulation> form_nv(const ImplantResult& result, int aperture_count,
                                    const YieldModel& model, std::uint64_t seed);

// Mean number of centers per aperture implied by dose times conversion:
// fluence * pi (d/2)^2 * base_yield.
double expected_mean_emitters(double fluence_per_cm2, double aperture_diameter_nm,
                              double base_yield);

} // namespace nvsim
