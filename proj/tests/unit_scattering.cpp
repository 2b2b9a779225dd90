#include "nvsim/scattering.hpp"

#include "scatter_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace nvsim;

namespace {
// N on natural carbon at 20 keV, the workhorse pair of the transport loop
const double kEps20 = 2.32685041571;
} // namespace

TEST_CASE("screening length for the N-C pair") {
    CHECK(screening_length_nm(7, 6) == doctest::Approx(0.0152394309168).epsilon(1e-9));
    // heavier pairs screen shorter
    CHECK(screening_length_nm(7, 6) > screening_length_nm(14, 14));
}

TEST_CASE("screened pair invariants") {
    const ScreenedPair pair(elements::nitrogen14, elements::carbon);
    CHECK(pair.a_nm == doctest::Approx(0.0152394309168).epsilon(1e-9));
    CHECK(pair.eps_per_ev * 20000.0 == doctest::Approx(kEps20).epsilon(1e-8));
    CHECK(pair.gamma == doctest::Approx(0.9941359969).epsilon(1e-9));
    CHECK(pair.mu == doctest::Approx(14.003074 / 12.011).epsilon(1e-12));
}

TEST_CASE("closest approach zeroes the radical and grows with b") {
    for (double b : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        const double x0 = closest_approach_reduced(kEps20, b);
        const double g = 1.0 - zbl_screening(x0) / (x0 * kEps20) - (b / x0) * (b / x0);
        CHECK(std::fabs(g) < 1e-10);
    }
    CHECK(closest_approach_reduced(kEps20, 2.0) > closest_approach_reduced(kEps20, 1.0));
    // at vanishing b the turning point solves 1 = Phi(x)/(x eps)
    CHECK(closest_approach_reduced(kEps20, 0.0) <
          closest_approach_reduced(kEps20, 0.1) + 1e-3);
}

TEST_CASE("deflection angle against frozen high-precision references") {
    CHECK(scattering_angle_reduced(kEps20, 0.0) == doctest::Approx(M_PI));
    // mpmath adaptive quadrature, 12 significant digits
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 0.1) - 2.084336134) < 2e-5);
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 0.5) - 0.5844874141) < 2e-5);
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 1.0) - 0.241331241493) < 2e-5);
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 2.0) - 0.07762793619) < 2e-5);
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 5.0) - 0.009201627785) < 2e-5);
    // raising the order tightens the answer
    CHECK(std::fabs(scattering_angle_reduced(kEps20, 1.0, 32) - 0.241331241493) < 5e-7);
}

TEST_CASE("deflection angle against the in-tree adaptive oracle") {
    for (double eps : {0.05, 0.5, 2.32685041571, 8.0})
        for (double b : {0.1, 0.7, 1.5, 4.0}) {
            CAPTURE(eps);
            CAPTURE(b);
            CHECK(std::fabs(scattering_angle_reduced(eps, b) -
                            scatter_oracle::theta_cm(eps, b)) < 1e-4);
        }
}

TEST_CASE("sin2_half matches the angle it derives from") {
    for (double b : {0.1, 0.5, 1.0, 2.0}) {
        const double theta = scattering_angle_reduced(kEps20, b);
        const double s2 = sin2_half_reduced(kEps20, b);
        CHECK(s2 == doctest::Approx(std::sin(0.5 * theta) * std::sin(0.5 * theta)).epsilon(1e-8));
    }
}

TEST_CASE("magic fast path reproduces the mean transferred energy to 1%") {
    // impact parameters sampled uniform in p^2 up to the transport's cutoff:
    // the statistic the fast path must preserve is the mean of sin^2(theta/2)
    const double bmax = 6.6064; // p_max over screening length, N in diamond
    for (double energy_kev : {0.1, 1.0, 5.0, 10.0, 20.0}) {
        CAPTURE(energy_kev);
        const ScreenedPair pair(elements::nitrogen14, elements::carbon);
        const double eps = pair.eps_per_ev * energy_kev * 1000.0;
        double exact = 0, magic = 0;
        const int n = 4000;
        for (int i = 0; i < n; ++i) {
            const double u = (i + 0.5) / n; // midpoint rule in u = (p/pmax)^2
            const double b = bmax * std::sqrt(u);
            exact += sin2_half_reduced(eps, b);
            magic += magic_sin2_half(eps, b);
        }
        CHECK(std::fabs(magic / exact - 1.0) < 0.01);
    }
}

TEST_CASE("public scattering_angle wraps the reduced computation") {
    const ScreenedPair pair(elements::nitrogen14, elements::carbon);
    const double b_nm = 0.01;
    const double direct = scattering_angle(elements::nitrogen14, elements::carbon, 20.0, b_nm);
    const double reduced = scattering_angle_reduced(kEps20, b_nm / pair.a_nm);
    CHECK(direct == doctest::Approx(reduced).epsilon(1e-9));
    CHECK_THROWS_AS(scattering_angle(elements::nitrogen14, elements::carbon, 0.0, 0.01),
                    std::invalid_argument);
    CHECK_THROWS_AS(scattering_angle(elements::nitrogen14, elements::carbon, 20.0, -0.01),
                    std::invalid_argument);
}

TEST_CASE("transferred energy kinematics") {
    // head-on transfer of the full kinematic factor
    CHECK(transfer_energy(M_PI, 20.0, 14.003074, 12.011) ==
          doctest::Approx(19.88272).epsilon(1e-6));
    CHECK(transfer_energy(0.0, 20.0, 14.003074, 12.011) == doctest::Approx(0.0));
    CHECK_THROWS_AS(transfer_energy(3.5, 20.0, 14.0, 12.0), std::invalid_argument);
    CHECK_THROWS_AS(transfer_energy(1.0, -1.0, 14.0, 12.0), std::invalid_argument);
}

TEST_CASE("lab deflection matches the tangent identity") {
    // tan(psi) = sin(theta) / (mu + cos(theta))
    for (double theta : {0.1, 0.5, 1.5, 2.8}) {
        const double mu = 14.003074 / 12.011;
        const double s2 = std::sin(0.5 * theta) * std::sin(0.5 * theta);
        double c, s;
        lab_deflection(s2, mu, c, s);
        const double psi = std::atan2(std::sin(theta), mu + std::cos(theta));
        CHECK(c == doctest::Approx(std::cos(psi)).epsilon(1e-10));
        CHECK(s == doctest::Approx(std::sin(psi)).epsilon(1e-10));
    }
}
