#pragma once

// Physical constants in the library's working units: energies in eV,
// lengths in nm, masses in unified atomic mass units.

namespace nvsim::constants {

// CODATA Bohr radius [nm]
inline constexpr double bohr_radius_nm = 0.0529177210544;

// e^2 / (4 pi eps0) [eV nm]
inline constexpr double e2_ev_nm = 1.4399645;

// Avogadro constant [1/mol]
inline constexpr double avogadro = 6.02214076e23;

// Prefactor of the ZBL universal screening length a_U = 0.8854 a0 / (Z1^0.23 + Z2^0.23)
inline constexpr double zbl_screening_prefactor = 0.8854;

// Kinetic energy per atomic mass unit of a particle moving at the Bohr
// velocity: (1/2) m_u (alpha c)^2 [keV/u]. Sets the velocity scale of
// velocity-proportional electronic stopping.
inline constexpr double bohr_velocity_kev_per_u = 24.801661341566;

inline constexpr double pi = 3.14159265358979323846;

} // namespace nvsim::constants
