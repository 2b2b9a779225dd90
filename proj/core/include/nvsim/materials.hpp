#pragma once

#include <string>
#include <string_view>
#include <vector>

// Target description: elements, materials with stoichiometry and density,
// and layered stacks. Also the stopping-power inputs the transport loop
// consumes (ZBL screening, Lindhard-Scharff electronic stopping).

namespace nvsim {

struct Element {
    int atomic_number = 0;
    double atomic_mass_u = 0.0;
};

// common species; target carbon uses the natural-abundance mass, the beam
// species use their isotope masses
namespace elements {
inline constexpr Element hydrogen{1, 1.008};
inline constexpr Element carbon{6, 12.011};
inline constexpr Element nitrogen{7, 14.007};
inline constexpr Element oxygen{8, 15.999};
inline constexpr Element nitrogen14{7, 14.003074};
inline constexpr Element carbon12{6, 12.0};
} // namespace elements

struct Component {
    Element element;
    double fraction = 0.0; // stoichiometric, sums to 1 over a material
};

struct Material {
    std::string name;
    std::vector<Component> components;
    double mass_density_g_cm3 = 0.0;
    double displacement_energy_ev = 0.0;
    double binding_energy_ev = 0.0; // spent freeing a recoil; affects vacancy tallies only

    // throws std::invalid_argument when an invariant fails
    void validate() const;

    double mean_atomic_mass_u() const;

    // atoms per nm^3, from mass density and mean atomic mass
    double atom_density_nm3() const;

    double atom_density_cm3() const;
};

// diamond (pure C, 3.51 g/cm3, Ed 50 eV) or pmma (C5H8O2, 1.19 g/cm3, Ed 25 eV);
// both with 3 eV lattice binding. Throws std::invalid_argument for other names.
Material builtin_material(std::string_view name);

// Lindhard-Scharff electronic stopping cross section S_e = k_L sqrt(E),
// Bragg-additive over the material's components [eV cm^2 / 1e15 atoms].
// Throws std::invalid_argument for energy <= 0.
double electronic_stopping(const Material& material, const Element& ion, double energy_kev);

// The same quantity as energy loss per path length [eV/nm] at the material's
// atomic density.
double electronic_stopping_ev_per_nm(const Material& material, const Element& ion,
                                     double energy_kev);

// ZBL universal screening function Phi(x); Phi(0) = 1, monotone decreasing.
// Throws std::invalid_argument for negative x.
double zbl_screening(double reduced_radius);

struct Layer {
    Material material;
    double thickness_nm = 0.0;
};

// Finite layers over a semi-infinite substrate. Depth z = 0 at the surface.
struct LayerStack {
    std::vector<Layer> layers;
    Material substrate;

    void validate() const;

    // material owning depth z (z below the last boundary is the substrate)
    const Material& material_at(double z_nm) const;

    // depth of the bottom of the last finite layer (0 when there are none)
    double resist_bottom_nm() const;

    // next boundary above/below z along direction dz, or +/-infinity
    double next_boundary_nm(double z_nm, double dz) const;
};

// bare substrate (open aperture) and resist-over-substrate (masked) stacks
LayerStack bare_stack(const Material& substrate);
LayerStack masked_stack(const Material& resist, double thickness_nm, const Material& substrate);

} // namespace nvsim
