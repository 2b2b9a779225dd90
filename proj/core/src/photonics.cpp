#include "nvsim/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nvsim {

namespace {

void check_dynamics(const EmitterDynamics& d) {
    if (d.excited_lifetime_ns <= 0 || d.pump_rate_per_ns <= 0)
        throw std::invalid_argument("emitter dynamics: rates must be positive");
    if (d.detection_efficiency <= 0 || d.detection_efficiency > 1)
        throw std::invalid_argument("emitter dynamics: efficiency outside (0, 1]");
}

} // namespace

double steady_state_excited_fraction(const EmitterDynamics& d) {
    const double decay = 1.0 / d.excited_lifetime_ns;
    return d.pump_rate_per_ns / (d.pump_rate_per_ns + decay);
}

double emission_rate_per_ns(const EmitterDynamics& d) {
    return steady_state_excited_fraction(d) / d.excited_lifetime_ns;
}

double detected_rate_cps(const EmitterDynamics& d) {
    return d.detection_efficiency * emission_rate_per_ns(d) * 1e9;
}

EmitterDynamics dynamics_for_brightness(double brightness_cps, const EmitterDynamics& base) {
    if (brightness_cps <= 0)
        throw std::invalid_argument("dynamics_for_brightness: brightness <= 0");
    EmitterDynamics d = base;
    d.detection_efficiency =
        std::min(1.0, brightness_cps / (emission_rate_per_ns(base) * 1e9));
    return d;
}

PhotonEventStream simulate_stream(const std::vector<EmitterDynamics>& emitters,
                                  double background_cps, double duration_s,
                                  std::uint64_t seed, double jitter_sigma_ns) {
    if (duration_s <= 0) throw std::invalid_argument("simulate_stream: duration <= 0");
    if (background_cps < 0) throw std::invalid_argument("simulate_stream: background < 0");
    const double duration_ns = duration_s * 1e9;

    struct Tagged {
        double t;
        std::uint32_t source;
    };
    std::vector<Tagged> photons;
    double signal_rate = 0;

    for (std::size_t i = 0; i < emitters.size(); ++i) {
        const EmitterDynamics& d = emitters[i];
        check_dynamics(d);
        signal_rate += detected_rate_cps(d);
        Rng rng(seed, "hbt.emitter", i);
        const double pump_mean = 1.0 / d.pump_rate_per_ns;
        double t = 0;
        for (;;) {
            // cycles until the next detected emission
            const double g = static_cast<double>(rng.geometric(d.detection_efficiency));
            t += rng.gamma(g, pump_mean) + rng.gamma(g, d.excited_lifetime_ns);
            if (t >= duration_ns) break;
            double stamp = t;
            if (jitter_sigma_ns > 0) {
                stamp += rng.normal(0.0, jitter_sigma_ns);
                if (stamp < 0 || stamp >= duration_ns) continue;
            }
            photons.push_back({stamp, static_cast<std::uint32_t>(i)});
        }
    }

    if (background_cps > 0) {
        Rng rng(seed, "hbt.background", 0);
        const double mean_gap_ns = 1e9 / background_cps;
        double t = rng.exponential(mean_gap_ns);
        while (t < duration_ns) {
            photons.push_back({t, static_cast<std::uint32_t>(emitters.size())});
            t += rng.exponential(mean_gap_ns);
        }
    }

    std::sort(photons.begin(), photons.end(), [](const Tagged& a, const Tagged& b) {
        return a.t != b.t ? a.t < b.t : a.source < b.source;
    });

    PhotonEventStream stream;
    stream.duration_ns = duration_ns;
    stream.signal_rate_cps = signal_rate;
    stream.background_rate_cps = background_cps;
    Rng route(seed, "hbt.route", 0);
    for (const auto& ph : photons)
        (route.uniform() < 0.5 ? stream.detector_a_ns : stream.detector_b_ns).push_back(ph.t);
    return stream;
}

PhotonEventStream simulate_stream(int n_emitters, const EmitterDynamics& dynamics,
                                  double background_cps, double duration_s,
                                  std::uint64_t seed, double jitter_sigma_ns) {
    if (n_emitters < 0) throw std::invalid_argument("simulate_stream: negative emitter count");
    return simulate_stream(std::vector<EmitterDynamics>(static_cast<std::size_t>(n_emitters),
                                                        dynamics),
                           background_cps, duration_s, seed, jitter_sigma_ns);
}

CorrelationHistogram correlate(const PhotonEventStream& stream, double bin_width_ns,
                               double max_tau_ns) {
    if (bin_width_ns <= 0 || max_tau_ns <= 0)
        throw std::invalid_argument("correlate: bin width and max tau must be positive");
    const auto& a = stream.detector_a_ns;
    const auto& b = stream.detector_b_ns;
    if (a.empty() || b.empty())
        throw std::invalid_argument("correlate: empty photon stream");
    if (stream.duration_ns <= 0) throw std::invalid_argument("correlate: empty duration");

    const std::size_t half = static_cast<std::size_t>(std::ceil(max_tau_ns / bin_width_ns));
    const std::size_t nbins = 2 * half;
    const double lo_edge = -static_cast<double>(half) * bin_width_ns;

    CorrelationHistogram hist;
    hist.bin_edges_ns.resize(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i)
        hist.bin_edges_ns[i] = lo_edge + static_cast<double>(i) * bin_width_ns;
    hist.counts.assign(nbins, 0);

    const double window = static_cast<double>(half) * bin_width_ns;
    std::size_t lo = 0;
    for (const double ta : a) {
        while (lo < b.size() && b[lo] < ta - window) ++lo;
        for (std::size_t j = lo; j < b.size() && b[j] < ta + window; ++j) {
            const double tau = b[j] - ta;
            std::size_t k = static_cast<std::size_t>((tau - lo_edge) / bin_width_ns);
            if (k >= nbins) k = nbins - 1;
            ++hist.counts[k];
        }
    }

    const double rate_a = static_cast<double>(a.size()) / stream.duration_ns;
    const double rate_b = static_cast<double>(b.size()) / stream.duration_ns;
    hist.normalization = rate_a * rate_b * stream.duration_ns * bin_width_ns;
    const double total = stream.signal_rate_cps + stream.background_rate_cps;
    hist.rho = total > 0 ? stream.signal_rate_cps / total : 1.0;
    return hist;
}

} // namespace nvsim
