#pragma once

#include "nvsim/photonics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nvsim {

// Measurement analysis: background-corrected correlation curves, per-spot
// emitter-count estimation, and Poisson statistics across the array.

struct G2Fit {
    double g2_zero = 1.0;      // fitted zero-delay value of 1 - a exp(-|tau|/t)
    double timescale_ns = 0.0; // fitted t
    double g2_zero_err = 0.0;  // one-sigma uncertainty of g2_zero, including
                               // the amplitude-timescale tradeoff
    bool unphysical = false;   // amplitude negative beyond its error, or the
                               // decay time failed to localize in the window
};

struct G2Curve {
    std::vector<double> tau_ns; // bin centers
    std::vector<double> value;  // corrected g2 per bin
    std::vector<double> error;  // propagated one-sigma per bin
    double rho = 1.0;           // signal fraction used for the correction
    G2Fit fit;
};

// Normalizes histogram counts to the uncorrelated level, applies the
// signal-fraction correction g2 = (c - (1 - rho^2)) / rho^2 with Poisson bin
// errors propagated, and fits the dip. rho comes from the histogram metadata
// unless overridden. Throws on empty histograms or rho <= 0.
G2Curve background_correct(const CorrelationHistogram& histogram);
G2Curve background_correct(const CorrelationHistogram& histogram, double rho);

// Weighted least-squares fit of 1 - a exp(-|tau|/t): the amplitude is solved
// in closed form at fixed t, and t is minimized by golden-section search on
// a log grid spanning sub-bin to millisecond-scale dips.
G2Fit fit_g2(std::span<const double> tau_ns, std::span<const double> value,
             std::span<const double> error);

enum class EstimateMethod { g2, intensity, combined };

struct SpotEstimate {
    int aperture = -1;
    long n_hat = 0;       // final estimate
    long n_g2 = 0;        // dip-based estimate, 0 when unavailable
    long n_intensity = 0; // brightness-based estimate
    EstimateMethod method = EstimateMethod::combined;
    std::string confidence; // "ok", "below-threshold", "unphysical-g2", "wide-fit", "discrepant"
};

// Emitter count from the correlation dip (N = 1/(1 - g2(0))) and from the
// spot intensity relative to a single emitter. The combined rule returns the
// intensity estimate and downgrades the confidence descriptor when the dip
// disagrees by more than one while being well constrained. Spots dimmer than
// half a single emitter report zero.
SpotEstimate estimate_count(const G2Curve& curve, double spot_intensity_cps,
                            double single_emitter_intensity_cps,
                            EstimateMethod method = EstimateMethod::combined);

// single-emitter certification: fitted g2(0) stays below 1/2 by at least
// twice its uncertainty
bool classify_single(const G2Curve& curve);

struct PoissonFit {
    std::size_t samples = 0;
    double mle_mean = 0;
    double chi_square = 0;
    int dof = 0;
    double p_value = 1.0;
    bool degenerate = false; // too few usable cells for a chi-square verdict
};

// MLE mean with a Pearson chi-square goodness-of-fit test; the high tail is
// merged until its expected count reaches 5. Degrees of freedom subtract the
// fitted mean and the normalization.
PoissonFit fit_poisson(const std::vector<long>& counts);

// conversion yield: mean emitters per site over mean implanted ions per site
double yield_from_statistics(double mle_mean, double expected_ions_per_aperture);

// Mode of an intensity histogram, used to bootstrap the single-emitter level
// from spots certified as single: center of the fullest bin, bin width a
// tenth of the median intensity.
double single_emitter_intensity(const std::vector<double>& intensities);

} // namespace nvsim
