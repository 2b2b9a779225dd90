#pragma once

#include "nvsim/mask.hpp"
#include "nvsim/materials.hpp"
#include "nvsim/rng.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace nvsim {

// Binary-collision transport of keV ions through amorphous layered targets.
// Flights of fixed length n^(-1/3) alternate with screened two-body
// collisions; electronic stopping drains energy continuously along flights.

struct TransportConfig {
    int quadrature_order = 16;    // Gauss-Mehler order for the exact deflection
    bool use_magic = false;       // analytic approximation instead of quadrature
    double stop_threshold_ev = 0; // 0: rest below the local displacement energy
    long max_collisions = 1000000;
    bool record_vacancy_positions = true;
};

struct IonState {
    Element species;
    double energy_kev = 0;
    double x_nm = 0, y_nm = 0, z_nm = 0;
    double dir_x = 0, dir_y = 0, dir_z = 1; // unit vector, +z into the target
};

enum class IonFate { rested, backscattered };

// Everything one transported ion left behind. The energy tallies satisfy
// initial = electronic + recoil + binding + residual exactly, up to roundoff.
struct IonOutcome {
    IonFate fate = IonFate::rested;
    double x_nm = 0, y_nm = 0, z_nm = 0; // rest point, or surface exit point
    double residual_energy_ev = 0;       // at rest, or carried out on exit
    double electronic_loss_ev = 0;
    double recoil_loss_ev = 0;
    double binding_loss_ev = 0;
    double path_length_nm = 0;
    long collisions = 0;
    long vacancy_count = 0;
    bool crossed_resist = false; // reached the layer/substrate interface
    std::vector<std::array<double, 3>> vacancy_positions;
};

// Splits a molecular ion's kinetic energy among its constituents in
// proportion to mass; the fragments share the molecule's velocity.
std::vector<double> split_molecule(double total_energy_kev,
                                   const std::vector<Element>& constituents);

IonOutcome simulate_ion(const IonState& ion, const LayerStack& stack,
                        const TransportConfig& config, Rng& rng);

struct RestPosition {
    Element species;
    int aperture = -1; // flat aperture index; -1 when not tied to a site
    double x_nm = 0, y_nm = 0, z_nm = 0;
    bool in_resist = false;
};

struct VacancySite {
    int aperture = -1;
    double x_nm = 0, y_nm = 0, z_nm = 0;
};

struct ImplantResult {
    std::vector<RestPosition> rest_positions;
    std::vector<VacancySite> vacancy_positions; // empty unless recording is on
    long vacancy_count = 0;
    long ions_in = 0;
    long exited_count = 0; // left through the top surface
    long transmitted_through_resist_count = 0;
    // aggregate energy ledger, eV
    double initial_energy_ev = 0;
    double electronic_energy_ev = 0;
    double recoil_energy_ev = 0;
    double binding_energy_ev = 0;
    double residual_energy_ev = 0;
};

struct ImplantConfig {
    double molecule_energy_kev = 40.0;
    Element ion_a = elements::nitrogen14;
    Element ion_b = elements::carbon12;
    double resist_thickness_nm = 200.0;
    TransportConfig transport;
    int threads = 1;
};

// Transports one ion pair per entry point, straight down from the surface.
// Entries inside an aperture see the bare substrate; entries under the
// resist see the masked stack. Invariant: ions_in equals rest count plus
// exited_count.
ImplantResult implant(const std::vector<EntryPoint>& entries, const ApertureMask& mask,
                      const ImplantConfig& config, std::uint64_t seed);

// Fraction of ion pairs that reach the substrate through a resist layer.
// Returns {transmitted, histories}.
struct TransmissionCheck {
    long transmitted = 0;
    long exited = 0;
    long histories = 0;
};
TransmissionCheck resist_transmission(const ImplantConfig& config, long histories,
                                      std::uint64_t seed);

struct DepthProfile {
    std::vector<double> bin_edges_nm;
    std::vector<long> counts;
    double mean_depth_nm = 0;
    double longitudinal_straggle_nm = 0; // stddev of rest depth
    double lateral_straggle_nm = 0;      // per-axis stddev, averaged over x and y
};

// Histogram plus moments of the rest depths of one species. Moments come
// from the unbinned sample. The lateral spread is taken about the sample
// mean, so it is only meaningful for entries at a common lateral origin.
DepthProfile depth_profile(const ImplantResult& result, const Element& species,
                           double bin_width_nm = 1.0);

} // namespace nvsim
