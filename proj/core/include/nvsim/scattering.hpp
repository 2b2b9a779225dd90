#pragma once

#include "nvsim/materials.hpp"

// Classical two-body scattering under the ZBL universal potential.
// Lengths are in units of the pair's screening length ("reduced") unless a
// _nm suffix says otherwise; energy enters through the dimensionless reduced
// energy eps.

namespace nvsim {

// ZBL universal screening length 0.8854 a0 / (Z1^0.23 + Z2^0.23)
double screening_length_nm(int z1, int z2);

// Precomputed per-pair factors the transport loop reuses every collision.
struct ScreenedPair {
    double a_nm = 0.0;       // screening length
    double eps_per_ev = 0.0; // reduced energy per eV of lab kinetic energy
    double gamma = 0.0;      // 4 m1 m2 / (m1+m2)^2, kinematic transfer factor
    double mu = 0.0;         // m1/m2

    ScreenedPair() = default;
    ScreenedPair(const Element& ion, const Element& target);
};

// Largest root of 1 - Phi(x)/(x eps) - (b/x)^2, the reduced distance of
// closest approach. Monotone in x, solved by safeguarded Newton. Throws
// std::runtime_error when the root cannot be bracketed (internal bug guard).
double closest_approach_reduced(double eps, double b);

// Center-of-mass deflection by Gauss-Mehler quadrature of the scattering
// integral at the given order. b = 0 returns pi exactly.
double scattering_angle_reduced(double eps, double b, int quadrature_order = 16);

// sin^2(theta_cm/2) on the same exact path
double sin2_half_reduced(double eps, double b, int quadrature_order = 16);

// Biersack-Haggmark analytic estimate of sin^2(theta_cm/2) (the config
// fast path). Above eps = 10 it switches to the screened-Rutherford form.
double magic_sin2_half(double eps, double b);

// Public operation: CM angle for ion on target at lab energy and impact
// parameter. Throws std::invalid_argument for energy <= 0 or negative p.
double scattering_angle(const Element& ion, const Element& target, double energy_kev,
                        double impact_parameter_nm, int quadrature_order = 16);

// Recoil energy T = gamma E sin^2(theta/2) [keV]. Throws
// std::invalid_argument when angle is outside [0, pi] or energy < 0.
double transfer_energy(double angle_rad, double energy_kev, double m_ion_u, double m_target_u);

// Lab-frame projectile deflection cosine/sine for a CM angle given as
// sin^2(theta/2), without evaluating the angle itself.
void lab_deflection(double sin2_half, double mu, double& cos_psi, double& sin_psi);

} // namespace nvsim
