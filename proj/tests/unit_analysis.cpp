#include "nvsim/analysis.hpp"

#include "nvsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace nvsim;

namespace {

CorrelationHistogram synthetic_histogram(const std::vector<long>& counts, double norm,
                                         double rho) {
    CorrelationHistogram h;
    const double half = 0.5 * static_cast<double>(counts.size());
    for (std::size_t i = 0; i <= counts.size(); ++i)
        h.bin_edges_ns.push_back(static_cast<double>(i) - half);
    h.counts = counts;
    h.normalization = norm;
    h.rho = rho;
    return h;
}

// an exact 1 - a exp(-|tau|/t) curve over n unit bins with constant errors
G2Curve exact_curve(double a, double t, std::size_t n, double err) {
    G2Curve c;
    const double half = 0.5 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = static_cast<double>(i) + 0.5 - half;
        c.tau_ns.push_back(tau);
        c.value.push_back(1.0 - a * std::exp(-std::fabs(tau) / t));
        c.error.push_back(err);
    }
    c.fit = fit_g2(c.tau_ns, c.value, c.error);
    return c;
}

} // namespace

TEST_CASE("background correction applies the signal-fraction formula per bin") {
    // rho = 0.8: uncorrelated-pair floor 1 - rho^2 = 0.36
    const auto h = synthetic_histogram({360, 1000, 640, 1000}, 1000.0, 0.8);
    const G2Curve c = background_correct(h);

    REQUIRE(c.tau_ns.size() == 4);
    CHECK(c.tau_ns[0] == doctest::Approx(-1.5));
    CHECK(c.tau_ns[3] == doctest::Approx(1.5));
    CHECK(c.rho == doctest::Approx(0.8));

    // (0.36 - 0.36) / 0.64 = 0: a perfect single-emitter zero-delay bin
    CHECK(c.value[0] == doctest::Approx(0.0).epsilon(1e-12));
    // (1.0 - 0.36) / 0.64 = 1: the flat plateau
    CHECK(c.value[1] == doctest::Approx(1.0).epsilon(1e-12));
    // (0.64 - 0.36) / 0.64 = 0.4375
    CHECK(c.value[2] == doctest::Approx(0.4375).epsilon(1e-12));

    // Poisson errors scaled by the same factors
    CHECK(c.error[0] == doctest::Approx(std::sqrt(360.0) / 1000.0 / 0.64).epsilon(1e-12));
    CHECK(c.error[1] == doctest::Approx(std::sqrt(1000.0) / 1000.0 / 0.64).epsilon(1e-12));

    // explicit rho override wins over the metadata
    const G2Curve raw = background_correct(h, 1.0);
    CHECK(raw.value[0] == doctest::Approx(0.36).epsilon(1e-12));

    CHECK_THROWS_AS(background_correct(CorrelationHistogram{}), std::invalid_argument);
    CHECK_THROWS_AS(background_correct(h, 0.0), std::invalid_argument);
}

TEST_CASE("dip fit recovers amplitude and timescale from an exact curve") {
    const G2Curve c = exact_curve(0.8, 9.0, 200, 0.02);
    CHECK_FALSE(c.fit.unphysical);
    CHECK(c.fit.g2_zero == doctest::Approx(0.2).epsilon(0.01));
    CHECK(c.fit.timescale_ns == doctest::Approx(9.0).epsilon(0.01));
    CHECK(c.fit.g2_zero_err > 0.0);
    CHECK(c.fit.g2_zero_err < 0.05);

    // a deep narrow dip
    const G2Curve d = exact_curve(1.0, 3.0, 100, 0.05);
    CHECK(d.fit.g2_zero == doctest::Approx(0.0).epsilon(0.05));
    CHECK(d.fit.timescale_ns == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("fits that fail to localize a dip are flagged") {
    // dead flat at 1: no dip to find
    G2Curve flat;
    for (int i = 0; i < 100; ++i) {
        flat.tau_ns.push_back(static_cast<double>(i) + 0.5 - 50.0);
        flat.value.push_back(1.0);
        flat.error.push_back(0.02);
    }
    flat.fit = fit_g2(flat.tau_ns, flat.value, flat.error);
    CHECK(flat.fit.unphysical);

    // bunched above 1: the best amplitude is negative beyond its error
    G2Curve bunched = flat;
    for (auto& v : bunched.value) v = 1.1;
    bunched.fit = fit_g2(bunched.tau_ns, bunched.value, bunched.error);
    CHECK(bunched.fit.unphysical);

    // a slope so slow it never turns over inside the window
    const G2Curve slow = exact_curve(0.5, 500.0, 100, 0.01);
    CHECK(slow.fit.unphysical);
}

TEST_CASE("count estimation: thresholds, methods, confidence descriptors") {
    G2Curve two = exact_curve(0.5, 9.0, 200, 0.01); // g2(0) = 0.5 -> n = 2

    // dim spots report zero regardless of the curve
    auto est = estimate_count(two, 100000.0, 250000.0);
    CHECK(est.n_hat == 0);
    CHECK(est.confidence == "below-threshold");

    // pure intensity estimate needs no curve at all
    est = estimate_count(G2Curve{}, 760000.0, 250000.0, EstimateMethod::intensity);
    CHECK(est.n_hat == 3);
    CHECK(est.n_intensity == 3);
    CHECK(est.confidence == "ok");

    // dip-based estimate
    est = estimate_count(two, 510000.0, 250000.0, EstimateMethod::g2);
    CHECK(est.n_g2 == 2);
    CHECK(est.n_hat == 2);
    CHECK(est.confidence == "ok");

    // an unusable dip falls back to the intensity, flagged
    G2Curve broken = two;
    broken.fit.unphysical = true;
    est = estimate_count(broken, 510000.0, 250000.0, EstimateMethod::g2);
    CHECK(est.n_hat == 2);
    CHECK(est.confidence == "unphysical-g2");

    // combined: intensity rules, the dip only grades the confidence
    est = estimate_count(two, 510000.0, 250000.0);
    CHECK(est.n_hat == 2);
    CHECK(est.confidence == "ok");

    est = estimate_count(two, 1250000.0, 250000.0); // n_int 5 vs n_g2 2
    CHECK(est.n_hat == 5);
    CHECK(est.confidence == "discrepant");

    G2Curve vague = two;
    vague.fit.g2_zero_err = 0.25; // poorly constrained dip
    est = estimate_count(vague, 1250000.0, 250000.0);
    CHECK(est.n_hat == 5);
    CHECK(est.confidence == "wide-fit");

    // a spot a touch above half the single level rounds up to one emitter
    est = estimate_count(G2Curve{}, 130000.0, 250000.0, EstimateMethod::intensity);
    CHECK(est.n_hat == 1);

    CHECK_THROWS_AS(estimate_count(two, 100000.0, 0.0), std::invalid_argument);
}

TEST_CASE("single-emitter certification is a two-sigma rule") {
    G2Curve c;
    c.fit.g2_zero = 0.2;
    c.fit.g2_zero_err = 0.01;
    CHECK(classify_single(c));

    c.fit.g2_zero = 0.45;
    c.fit.g2_zero_err = 0.04; // 0.45 + 0.08 = 0.53 > 0.5
    CHECK_FALSE(classify_single(c));

    c.fit.g2_zero = 0.45;
    c.fit.g2_zero_err = 0.02; // 0.49 < 0.5
    CHECK(classify_single(c));

    c.fit.g2_zero = 0.7;
    c.fit.g2_zero_err = 0.0;
    CHECK_FALSE(classify_single(c));
}

TEST_CASE("simulated streams round-trip through correction and fit") {
    // N identical emitters at 250 kcps plus background chosen to set rho;
    // the corrected dip must land on 1 - 1/N. The integration time scales
    // as 1/rho^2 to keep the dip resolved.
    const EmitterDynamics d;
    const double single_cps = detected_rate_cps(d);
    const double lifetime = 1.0 / (d.pump_rate_per_ns + 1.0 / d.excited_lifetime_ns);
    std::uint64_t seed = 9100;
    for (double rho : {1.0, 0.8, 0.5}) {
        for (int n : {1, 2, 5}) {
            CAPTURE(rho);
            CAPTURE(n);
            const double signal = n * single_cps;
            const double background = signal * (1.0 - rho) / rho;
            const PhotonEventStream s =
                simulate_stream(n, d, background, 1.0 / (rho * rho), seed++);
            const CorrelationHistogram h = correlate(s, 1.0, 150.0);
            CHECK(h.rho == doctest::Approx(rho).epsilon(1e-9));
            const G2Curve c = background_correct(h);
            REQUIRE_FALSE(c.fit.unphysical);
            const double theory = 1.0 - 1.0 / n;
            CHECK(std::fabs(c.fit.g2_zero - theory) <
                  std::max(3.5 * c.fit.g2_zero_err, 0.03));
            if (rho == 1.0)
                CHECK(c.fit.timescale_ns == doctest::Approx(lifetime).epsilon(0.25));
        }
    }
}

TEST_CASE("the correction formula itself is exact at the bin level") {
    // the harshest regime for the fit is still easy for the per-bin formula:
    // after correction the plateau must sit at 1 and the innermost bins at
    // the raw dip, within plain counting errors
    const EmitterDynamics d;
    const double single_cps = detected_rate_cps(d);
    const PhotonEventStream s = simulate_stream(1, d, single_cps, 4.0, 777); // rho = 0.5
    const G2Curve c = background_correct(correlate(s, 1.0, 150.0));

    double plateau = 0, plateau_var = 0;
    std::size_t np = 0;
    double inner = 0, inner_var = 0;
    std::size_t ni = 0;
    for (std::size_t i = 0; i < c.tau_ns.size(); ++i) {
        if (std::fabs(c.tau_ns[i]) > 60.0) {
            plateau += c.value[i];
            plateau_var += c.error[i] * c.error[i];
            ++np;
        } else if (std::fabs(c.tau_ns[i]) < 1.0) {
            inner += c.value[i];
            inner_var += c.error[i] * c.error[i];
            ++ni;
        }
    }
    plateau /= static_cast<double>(np);
    inner /= static_cast<double>(ni);
    CHECK(std::fabs(plateau - 1.0) < 3.0 * std::sqrt(plateau_var) / static_cast<double>(np));
    // true g2 at |tau| = 0.5 ns for a 9.23 ns antibunching time
    const double expect = 1.0 - std::exp(-0.5 / 9.230769231);
    CHECK(std::fabs(inner - expect) < 3.0 * std::sqrt(inner_var) / static_cast<double>(ni));
}

TEST_CASE("Poisson goodness of fit accepts Poisson data and rejects uniform") {
    Rng rng(2468, "poisson-fit", 0);
    std::vector<long> sample;
    sample.reserve(10000);
    for (int i = 0; i < 10000; ++i)
        sample.push_back(static_cast<long>(rng.poisson(3.5)));
    const PoissonFit good = fit_poisson(sample);
    CHECK_FALSE(good.degenerate);
    CHECK(good.samples == 10000);
    double mean = 0;
    for (long c : sample) mean += static_cast<double>(c);
    mean /= 10000.0;
    CHECK(good.mle_mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(good.mle_mean == doctest::Approx(3.5).epsilon(0.02));
    CHECK(good.dof >= 5);
    CHECK(good.p_value > 0.01);

    std::vector<long> uniform;
    for (int i = 0; i < 10000; ++i) uniform.push_back(i % 8);
    const PoissonFit bad = fit_poisson(uniform);
    CHECK_FALSE(bad.degenerate);
    CHECK(bad.p_value < 0.01);
}

TEST_CASE("Poisson fit edge cases") {
    const PoissonFit zeros = fit_poisson(std::vector<long>(100, 0));
    CHECK(zeros.degenerate);
    CHECK(zeros.mle_mean == doctest::Approx(0.0));

    // too few samples to populate two cells with expected >= 5
    const PoissonFit tiny = fit_poisson({2, 2, 2});
    CHECK(tiny.degenerate);
    CHECK(tiny.p_value == doctest::Approx(1.0));

    CHECK_THROWS_AS(fit_poisson({}), std::invalid_argument);
    CHECK_THROWS_AS(fit_poisson({1, -1}), std::invalid_argument);
}

TEST_CASE("yield is the emitter mean over the ion mean") {
    CHECK(yield_from_statistics(3.5185838, 50.26548246) == doctest::Approx(0.07).epsilon(1e-7));
    CHECK(yield_from_statistics(0.0, 50.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(yield_from_statistics(3.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(yield_from_statistics(-1.0, 50.0), std::invalid_argument);
}

TEST_CASE("single-emitter level bootstrap picks the histogram mode") {
    // identical intensities collapse into one bin anchored at the minimum
    CHECK(single_emitter_intensity(std::vector<double>(10, 100.0)) == doctest::Approx(105.0));

    // a dominant cluster beats sparse bright outliers
    std::vector<double> xs;
    Rng rng(13, "mode", 0);
    for (int i = 0; i < 30; ++i) xs.push_back(240000.0 + 20000.0 * rng.uniform());
    xs.push_back(500000.0);
    xs.push_back(760000.0);
    const double mode = single_emitter_intensity(xs);
    CHECK(mode > 230000.0);
    CHECK(mode < 270000.0);

    CHECK_THROWS_AS(single_emitter_intensity({}), std::invalid_argument);
}
