#pragma once

#include "nvsim/rng.hpp"

#include <cstdint>
#include <vector>

namespace nvsim {

// Photon streams from continuously pumped two-level emitters, split onto two
// detectors, and their intensity correlation.

struct EmitterDynamics {
    double excited_lifetime_ns = 12.0;
    double pump_rate_per_ns = 0.025;
    double detection_efficiency = 0.013; // probability a given emission is detected
};

// excited-state occupation under continuous pumping, P / (P + 1/lifetime)
double steady_state_excited_fraction(const EmitterDynamics& d);

// emitted photons per ns at steady state
double emission_rate_per_ns(const EmitterDynamics& d);

// detected photons per second at steady state
double detected_rate_cps(const EmitterDynamics& d);

// dynamics whose detected rate equals the requested brightness; the
// efficiency saturates at 1 when the request exceeds the emission rate
EmitterDynamics dynamics_for_brightness(double brightness_cps, const EmitterDynamics& base);

struct PhotonEventStream {
    std::vector<double> detector_a_ns; // strictly increasing, within [0, duration]
    std::vector<double> detector_b_ns;
    double duration_ns = 0;
    double signal_rate_cps = 0;     // configured detected emitter rate, both detectors
    double background_rate_cps = 0; // configured background rate, both detectors
};

// Exact sampling: each emitter resets to the ground state after emitting, so
// detected interarrival times are a geometric number of pump+decay cycles.
// Background is homogeneous Poisson. Every detected photon is routed to one
// of the two detectors with probability 1/2. Optional Gaussian timing jitter
// is applied per photon before routing. Deterministic per seed.
PhotonEventStream simulate_stream(const std::vector<EmitterDynamics>& emitters,
                                  double background_cps, double duration_s,
                                  std::uint64_t seed, double jitter_sigma_ns = 0.0);

// convenience overload: n identical emitters
PhotonEventStream simulate_stream(int n_emitters, const EmitterDynamics& dynamics,
                                  double background_cps, double duration_s,
                                  std::uint64_t seed, double jitter_sigma_ns = 0.0);

struct CorrelationHistogram {
    std::vector<double> bin_edges_ns; // uniform, symmetric about tau = 0
    std::vector<long> counts;
    double normalization = 0; // expected pairs per bin for uncorrelated streams
    double rho = 1;           // signal fraction S / (S + B), from stream metadata
};

// Start-stop-free correlation: every A-B pair with |t_b - t_a| <= max_tau
// lands in a tau bin. normalization uses the measured detector rates, so
// counts / normalization is flat at 1 for uncorrelated light. Throws
// std::invalid_argument when either detector saw no photons.
CorrelationHistogram correlate(const PhotonEventStream& stream, double bin_width_ns = 1.0,
                               double max_tau_ns = 200.0);

} // namespace nvsim
