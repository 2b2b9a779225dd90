#include "nvsim/analysis.hpp"

#include "nvsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvsim {

namespace {

// profiled weighted least squares at fixed decay time: chi2(t) with the
// optimal amplitude substituted, plus that amplitude and its variance
struct ProfiledFit {
    double chi2 = 0, a = 0, var_a = 0;
};

ProfiledFit profile_amplitude(std::span<const double> tau, std::span<const double> val,
                              std::span<const double> err, double t) {
    double swe2 = 0, swe_r = 0, base = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double w = 1.0 / (err[i] * err[i]);
        const double e = std::exp(-std::fabs(tau[i]) / t);
        swe2 += w * e * e;
        swe_r += w * e * (1.0 - val[i]);
        base += w * (1.0 - val[i]) * (1.0 - val[i]);
    }
    ProfiledFit f;
    f.a = swe2 > 0 ? swe_r / swe2 : 0.0;
    f.var_a = swe2 > 0 ? 1.0 / swe2 : std::numeric_limits<double>::infinity();
    // chi2 = sum w (1 - v)^2 - a^2 sum w e^2 after substituting the optimum
    f.chi2 = base - f.a * f.a * swe2;
    return f;
}

} // namespace

G2Fit fit_g2(std::span<const double> tau_ns, std::span<const double> value,
             std::span<const double> error) {
    if (tau_ns.empty() || tau_ns.size() != value.size() || tau_ns.size() != error.size())
        throw std::invalid_argument("fit_g2: empty or mismatched inputs");
    for (double e : error)
        if (!(e > 0)) throw std::invalid_argument("fit_g2: nonpositive bin error");

    // golden-section on log t; the profiled objective is smooth and
    // single-dipped for dip-shaped data
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::log(0.5), hi = std::log(1000.0);
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = profile_amplitude(tau_ns, value, error, std::exp(x1)).chi2;
    double f2 = profile_amplitude(tau_ns, value, error, std::exp(x2)).chi2;
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = profile_amplitude(tau_ns, value, error, std::exp(x1)).chi2;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = profile_amplitude(tau_ns, value, error, std::exp(x2)).chi2;
        }
    }
    const double t = std::exp(0.5 * (lo + hi));
    const ProfiledFit best = profile_amplitude(tau_ns, value, error, t);

    // the conditional amplitude variance understates the uncertainty because
    // the amplitude and the decay time trade against each other; add the
    // profile-likelihood term (da/dlnt)^2 var(lnt) from the chi2 curvature
    const double delta = 0.15;
    const ProfiledFit up = profile_amplitude(tau_ns, value, error, t * std::exp(delta));
    const ProfiledFit dn = profile_amplitude(tau_ns, value, error, t * std::exp(-delta));
    const double curvature = (up.chi2 + dn.chi2 - 2.0 * best.chi2) / (delta * delta);
    const double span = std::log(1000.0) - std::log(0.5);
    const double var_lnt_cap = span * span / 12.0; // flat profile over the search range
    const double var_lnt = curvature > 0 ? std::min(2.0 / curvature, var_lnt_cap) : var_lnt_cap;
    const double da_dlnt = (up.a - dn.a) / (2.0 * delta);
    const double var_a = best.var_a + da_dlnt * da_dlnt * var_lnt;

    double window = 0;
    for (double tau : tau_ns) window = std::max(window, std::fabs(tau));

    G2Fit fit;
    fit.timescale_ns = t;
    fit.g2_zero = 1.0 - best.a;
    fit.g2_zero_err = std::sqrt(var_a);
    // a decay slower than half the window is indistinguishable from a flat
    // offset, so the dip did not localize
    fit.unphysical = best.a + fit.g2_zero_err <= 0.0 || t > 0.5 * window;
    return fit;
}

G2Curve background_correct(const CorrelationHistogram& histogram) {
    return background_correct(histogram, histogram.rho);
}

G2Curve background_correct(const CorrelationHistogram& histogram, double rho) {
    if (histogram.counts.empty()) throw std::invalid_argument("background_correct: empty histogram");
    if (histogram.bin_edges_ns.size() != histogram.counts.size() + 1)
        throw std::invalid_argument("background_correct: edge/count size mismatch");
    if (!(rho > 0.0) || rho > 1.0)
        throw std::invalid_argument("background_correct: rho must lie in (0, 1]");
    if (!(histogram.normalization > 0.0))
        throw std::invalid_argument("background_correct: nonpositive normalization");

    G2Curve curve;
    curve.rho = rho;
    const double flat = 1.0 - rho * rho;
    const double inv_rho2 = 1.0 / (rho * rho);
    curve.tau_ns.reserve(histogram.counts.size());
    curve.value.reserve(histogram.counts.size());
    curve.error.reserve(histogram.counts.size());
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
        curve.tau_ns.push_back(0.5 * (histogram.bin_edges_ns[i] + histogram.bin_edges_ns[i + 1]));
        const double c = static_cast<double>(histogram.counts[i]) / histogram.normalization;
        curve.value.push_back((c - flat) * inv_rho2);
        // Poisson error on the raw count; zero-count bins get the error of one
        const double dc = std::sqrt(std::max<double>(static_cast<double>(histogram.counts[i]), 1.0)) /
                          histogram.normalization;
        curve.error.push_back(dc * inv_rho2);
    }
    curve.fit = fit_g2(curve.tau_ns, curve.value, curve.error);
    return curve;
}

SpotEstimate estimate_count(const G2Curve& curve, double spot_intensity_cps,
                            double single_emitter_intensity_cps, EstimateMethod method) {
    if (!(single_emitter_intensity_cps > 0))
        throw std::invalid_argument("estimate_count: single-emitter intensity must be positive");
    SpotEstimate est;
    est.method = method;

    if (spot_intensity_cps < 0.5 * single_emitter_intensity_cps) {
        est.confidence = "below-threshold";
        return est;
    }
    est.n_intensity = std::lround(spot_intensity_cps / single_emitter_intensity_cps);
    if (est.n_intensity < 1) est.n_intensity = 1;

    const bool dip_usable = !curve.fit.unphysical && curve.fit.g2_zero < 0.995;
    if (dip_usable) {
        est.n_g2 = std::lround(1.0 / (1.0 - curve.fit.g2_zero));
        if (est.n_g2 < 1) est.n_g2 = 1;
    }

    switch (method) {
    case EstimateMethod::g2:
        if (dip_usable) {
            est.n_hat = est.n_g2;
            est.confidence = "ok";
        } else {
            est.n_hat = est.n_intensity;
            est.confidence = "unphysical-g2";
        }
        break;
    case EstimateMethod::intensity:
        est.n_hat = est.n_intensity;
        est.confidence = "ok";
        break;
    case EstimateMethod::combined:
        est.n_hat = est.n_intensity;
        if (!dip_usable)
            est.confidence = "unphysical-g2";
        else if (std::labs(est.n_g2 - est.n_intensity) <= 1)
            est.confidence = "ok";
        else if (curve.fit.g2_zero_err > 0.15)
            est.confidence = "wide-fit";
        else
            est.confidence = "discrepant";
        break;
    }
    return est;
}

bool classify_single(const G2Curve& curve) {
    return curve.fit.g2_zero + 2.0 * curve.fit.g2_zero_err < 0.5;
}

PoissonFit fit_poisson(const std::vector<long>& counts) {
    if (counts.empty()) throw std::invalid_argument("fit_poisson: empty input");
    PoissonFit fit;
    fit.samples = counts.size();
    long max_k = 0;
    double sum = 0;
    for (long c : counts) {
        if (c < 0) throw std::invalid_argument("fit_poisson: negative count");
        sum += static_cast<double>(c);
        max_k = std::max(max_k, c);
    }
    const double n = static_cast<double>(counts.size());
    fit.mle_mean = sum / n;
    if (fit.mle_mean == 0.0) {
        fit.degenerate = true;
        return fit;
    }

    // merge the high tail into one cell until its expected count reaches 5
    std::vector<double> expected;
    std::vector<long> observed(static_cast<std::size_t>(max_k) + 1, 0);
    for (long c : counts) observed[static_cast<std::size_t>(c)]++;
    double cum = 0;
    long split = 0; // first k belonging to the tail cell
    for (long k = 0; k <= max_k; ++k) {
        const double e = n * stats::poisson_pmf(static_cast<std::uint64_t>(k), fit.mle_mean);
        if (n - cum - e < 5.0) break;
        expected.push_back(e);
        cum += e;
        split = k + 1;
    }
    std::vector<double> exp_cells = expected;
    std::vector<double> obs_cells(exp_cells.size(), 0.0);
    for (long k = 0; k < split; ++k)
        obs_cells[static_cast<std::size_t>(k)] = static_cast<double>(observed[static_cast<std::size_t>(k)]);
    double tail_obs = 0;
    for (long k = split; k <= max_k; ++k) tail_obs += static_cast<double>(observed[static_cast<std::size_t>(k)]);
    exp_cells.push_back(n - cum);
    obs_cells.push_back(tail_obs);

    const int ncells = static_cast<int>(exp_cells.size());
    fit.dof = ncells - 2; // mean and normalization are consumed
    if (fit.dof < 1) {
        fit.degenerate = true;
        fit.p_value = 1.0;
        return fit;
    }
    double chi2 = 0;
    for (int i = 0; i < ncells; ++i) {
        const double d = obs_cells[static_cast<std::size_t>(i)] - exp_cells[static_cast<std::size_t>(i)];
        chi2 += d * d / exp_cells[static_cast<std::size_t>(i)];
    }
    fit.chi_square = chi2;
    fit.p_value = stats::chi2_sf(chi2, static_cast<double>(fit.dof));
    return fit;
}

double yield_from_statistics(double mle_mean, double expected_ions_per_aperture) {
    if (!(expected_ions_per_aperture > 0))
        throw std::invalid_argument("yield_from_statistics: expected ions must be positive");
    if (mle_mean < 0) throw std::invalid_argument("yield_from_statistics: negative mean");
    return mle_mean / expected_ions_per_aperture;
}

double single_emitter_intensity(const std::vector<double>& intensities) {
    if (intensities.empty())
        throw std::invalid_argument("single_emitter_intensity: no intensities");
    std::vector<double> xs = intensities;
    std::sort(xs.begin(), xs.end());
    const double median = xs[xs.size() / 2];
    if (!(median > 0)) throw std::invalid_argument("single_emitter_intensity: nonpositive median");
    const double bin = 0.1 * median;
    const double lo = xs.front();
    std::vector<int> hist(static_cast<std::size_t>((xs.back() - lo) / bin) + 1, 0);
    for (double x : xs) hist[static_cast<std::size_t>((x - lo) / bin)]++;
    std::size_t best = 0;
    for (std::size_t i = 1; i < hist.size(); ++i)
        if (hist[i] > hist[best]) best = i;
    return lo + (static_cast<double>(best) + 0.5) * bin;
}

} // namespace nvsim
