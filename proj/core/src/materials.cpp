#include "nvsim/materials.hpp"

#include "nvsim/constants.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvsim {

void Material::validate() const {
    if (components.empty()) throw std::invalid_argument("material " + name + ": no components");
    double sum = 0.0;
    for (const auto& c : components) {
        if (c.element.atomic_number < 1)
            throw std::invalid_argument("material " + name + ": atomic number < 1");
        if (c.element.atomic_mass_u <= 0.0)
            throw std::invalid_argument("material " + name + ": nonpositive atomic mass");
        if (c.fraction <= 0.0)
            throw std::invalid_argument("material " + name + ": nonpositive fraction");
        sum += c.fraction;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("material " + name + ": fractions sum to " +
                                    std::to_string(sum) + ", expected 1");
    if (mass_density_g_cm3 <= 0.0)
        throw std::invalid_argument("material " + name + ": nonpositive density");
    if (displacement_energy_ev <= 0.0)
        throw std::invalid_argument("material " + name + ": nonpositive displacement energy");
    if (binding_energy_ev < 0.0)
        throw std::invalid_argument("material " + name + ": negative binding energy");
}

double Material::mean_atomic_mass_u() const {
    double m = 0.0;
    for (const auto& c : components) m += c.fraction * c.element.atomic_mass_u;
    return m;
}

double Material::atom_density_cm3() const {
    return mass_density_g_cm3 * constants::avogadro / mean_atomic_mass_u();
}

double Material::atom_density_nm3() const { return atom_density_cm3() * 1e-21; }

Material builtin_material(std::string_view name) {
    if (name == "diamond") {
        Material m{"diamond", {{elements::carbon, 1.0}}, 3.51, 50.0, 3.0};
        m.validate();
        return m;
    }
    if (name == "pmma") {
        // C5H8O2 monomer
        Material m{"pmma",
                   {{elements::carbon, 5.0 / 15.0},
                    {elements::hydrogen, 8.0 / 15.0},
                    {elements::oxygen, 2.0 / 15.0}},
                   1.19,
                   25.0,
                   3.0};
        m.validate();
        return m;
    }
    throw std::invalid_argument("unknown material: " + std::string(name));
}

double electronic_stopping(const Material& material, const Element& ion, double energy_kev) {
    if (energy_kev <= 0.0) throw std::invalid_argument("electronic_stopping: energy <= 0");
    const double z1 = static_cast<double>(ion.atomic_number);
    // Lindhard-Scharff velocity-proportional stopping,
    //   S_e = Z1^(1/6) * 8 pi e^2 a0 * Z1 Z2 / (Z1^(2/3)+Z2^(2/3))^(3/2) * v/v0,
    // evaluated per component and weighted by stoichiometry (Bragg additivity).
    const double z1_23 = std::cbrt(z1 * z1);
    const double v_over_v0 =
        std::sqrt(energy_kev / (constants::bohr_velocity_kev_per_u * ion.atomic_mass_u));
    const double prefactor_ev_nm2 =
        std::pow(z1, 1.0 / 6.0) * 8.0 * constants::pi * constants::e2_ev_nm *
        constants::bohr_radius_nm;
    double se_ev_nm2 = 0.0;
    for (const auto& c : material.components) {
        const double z2 = static_cast<double>(c.element.atomic_number);
        const double z2_23 = std::cbrt(z2 * z2);
        const double denom = std::pow(z1_23 + z2_23, 1.5);
        se_ev_nm2 += c.fraction * prefactor_ev_nm2 * z1 * z2 / denom * v_over_v0;
    }
    // 1 eV nm^2 = 10 eV cm^2 per 1e15 atoms.
    return se_ev_nm2 * 10.0;
}

double electronic_stopping_ev_per_nm(const Material& material, const Element& ion,
                                     double energy_kev) {
    // S_e [eV cm^2/1e15 atoms] * n [atoms/nm^3] -> eV/nm: the cross-section
    // unit is per 1e15 atoms/cm^2 areal density; 1 nm of material holds
    // n * 1e14 atoms/cm^2 per 1e15 = n/10 such units.
    return electronic_stopping(material, ion, energy_kev) * material.atom_density_nm3() * 0.1;
}

double zbl_screening(double reduced_radius) {
    if (reduced_radius < 0.0) throw std::invalid_argument("zbl_screening: negative radius");
    const double x = reduced_radius;
    return 0.18175 * std::exp(-3.19980 * x) + 0.50986 * std::exp(-0.94229 * x) +
           0.28022 * std::exp(-0.40290 * x) + 0.02817 * std::exp(-0.20162 * x);
}

void LayerStack::validate() const {
    for (const auto& l : layers) {
        l.material.validate();
        if (l.thickness_nm <= 0.0)
            throw std::invalid_argument("layer " + l.material.name + ": nonpositive thickness");
    }
    substrate.validate();
}

const Material& LayerStack::material_at(double z_nm) const {
    double top = 0.0;
    for (const auto& l : layers) {
        top += l.thickness_nm;
        if (z_nm < top) return l.material;
    }
    return substrate;
}

double LayerStack::resist_bottom_nm() const {
    double z = 0.0;
    for (const auto& l : layers) z += l.thickness_nm;
    return z;
}

double LayerStack::next_boundary_nm(double z_nm, double dz) const {
    const double inf = std::numeric_limits<double>::infinity();
    if (dz == 0.0) return inf;
    if (dz > 0.0) {
        double top = 0.0;
        for (const auto& l : layers) {
            top += l.thickness_nm;
            if (z_nm < top) return top;
        }
        return inf; // inside the semi-infinite substrate
    }
    // moving up: boundaries below z (including the surface at 0)
    double best = 0.0;
    double top = 0.0;
    for (const auto& l : layers) {
        top += l.thickness_nm;
        if (top < z_nm) best = top;
    }
    return z_nm > 0.0 ? best : -inf;
}

LayerStack bare_stack(const Material& substrate) { return LayerStack{{}, substrate}; }

LayerStack masked_stack(const Material& resist, double thickness_nm, const Material& substrate) {
    return LayerStack{{Layer{resist, thickness_nm}}, substrate};
}

} // namespace nvsim
