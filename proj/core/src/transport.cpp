#include "nvsim/transport.hpp"

#include "nvsim/constants.hpp"
#include "nvsim/parallel.hpp"
#include "nvsim/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvsim {

namespace {

struct MediumComponent {
    ScreenedPair pair;
    double cum_fraction;
    // Lindhard energy scale and damage constant for the struck atom
    // recoiling among its own kind; good for elemental targets, an
    // approximation for compounds.
    double lindhard_ev;
    double k_damage;
};

struct Medium {
    double z_top, z_bottom;
    double n_nm3;
    double flight_nm;
    double pmax_nm;
    double dedx_coeff; // eV/nm at 1 keV; scales as sqrt(E)
    double displacement_ev;
    double binding_ev;
    std::vector<MediumComponent> comps;
};

Medium make_medium(const Material& mat, const Element& ion, double z_top, double z_bottom) {
    Medium m;
    m.z_top = z_top;
    m.z_bottom = z_bottom;
    m.n_nm3 = mat.atom_density_nm3();
    m.flight_nm = std::pow(m.n_nm3, -1.0 / 3.0);
    m.pmax_nm = 1.0 / std::sqrt(constants::pi * std::pow(m.n_nm3, 2.0 / 3.0));
    m.dedx_coeff = electronic_stopping(mat, ion, 1.0) * m.n_nm3 / 10.0;
    m.displacement_ev = mat.displacement_energy_ev;
    m.binding_ev = mat.binding_energy_ev;
    double cum = 0;
    for (const auto& c : mat.components) {
        MediumComponent mc{ScreenedPair(ion, c.element), 0, 0, 0};
        cum += c.fraction;
        mc.cum_fraction = cum;
        const int z = c.element.atomic_number;
        const double a_self = screening_length_nm(z, z);
        mc.lindhard_ev = 2.0 * z * z * constants::e2_ev_nm / a_self;
        mc.k_damage = 0.1337 * std::pow(z, 2.0 / 3.0) / std::sqrt(c.element.atomic_mass_u);
        m.comps.push_back(mc);
    }
    m.comps.back().cum_fraction = 1.0; // absorb fraction roundoff
    return m;
}

std::vector<Medium> build_media(const LayerStack& stack, const Element& ion) {
    std::vector<Medium> media;
    double z = 0;
    for (const auto& layer : stack.layers) {
        media.push_back(make_medium(layer.material, ion, z, z + layer.thickness_nm));
        z += layer.thickness_nm;
    }
    media.push_back(
        make_medium(stack.substrate, ion, z, std::numeric_limits<double>::infinity()));
    return media;
}

std::size_t medium_index_at(const std::vector<Medium>& media, double z) {
    for (std::size_t i = 0; i + 1 < media.size(); ++i)
        if (z < media[i].z_bottom) return i;
    return media.size() - 1;
}

// Displacements per recoil of energy e_ev, using the standard damage-energy
// partition and the 0.8 ratio to the threshold pair.
double nrt_displacements(double e_ev, double ed_ev, const MediumComponent& c) {
    if (e_ev <= 0) return 0;
    const double eps = e_ev / c.lindhard_ev;
    const double g = 3.4008 * std::pow(eps, 1.0 / 6.0) + 0.40244 * std::pow(eps, 0.75) + eps;
    const double e_dam = e_ev / (1.0 + c.k_damage * g);
    if (e_dam < ed_ev) return 0;
    if (e_dam < 2.0 * ed_ev / 0.8) return 1;
    return 0.8 * e_dam / (2.0 * ed_ev);
}

void rotate_direction(double& dx, double& dy, double& dz, double cos_psi, double sin_psi,
                      double phi) {
    const double cph = std::cos(phi);
    const double sph = std::sin(phi);
    const double s2 = dx * dx + dy * dy;
    if (s2 < 1e-20) {
        dx = sin_psi * cph;
        dy = sin_psi * sph;
        dz = dz >= 0 ? cos_psi : -cos_psi;
    } else {
        const double s = std::sqrt(s2);
        const double nx = dx * cos_psi + sin_psi * (dx * dz * cph - dy * sph) / s;
        const double ny = dy * cos_psi + sin_psi * (dy * dz * cph + dx * sph) / s;
        const double nz = dz * cos_psi - s * sin_psi * cph;
        dx = nx;
        dy = ny;
        dz = nz;
    }
    const double inv = 1.0 / std::sqrt(dx * dx + dy * dy + dz * dz);
    dx *= inv;
    dy *= inv;
    dz *= inv;
}

} // namespace

std::vector<double> split_molecule(double total_energy_kev,
                                   const std::vector<Element>& constituents) {
    if (total_energy_kev <= 0)
        throw std::invalid_argument("split_molecule: energy must be positive");
    if (constituents.empty())
        throw std::invalid_argument("split_molecule: no constituents");
    double mass = 0;
    for (const auto& e : constituents) mass += e.atomic_mass_u;
    std::vector<double> energies;
    energies.reserve(constituents.size());
    for (const auto& e : constituents)
        energies.push_back(total_energy_kev * e.atomic_mass_u / mass);
    return energies;
}

IonOutcome simulate_ion(const IonState& ion, const LayerStack& stack,
                        const TransportConfig& config, Rng& rng) {
    if (ion.energy_kev <= 0)
        throw std::invalid_argument("simulate_ion: energy must be positive");
    const double norm =
        ion.dir_x * ion.dir_x + ion.dir_y * ion.dir_y + ion.dir_z * ion.dir_z;
    if (std::fabs(norm - 1.0) > 1e-9)
        throw std::invalid_argument("simulate_ion: direction must be a unit vector");
    if (ion.z_nm < 0) throw std::invalid_argument("simulate_ion: ion starts above the surface");

    const std::vector<Medium> media = build_media(stack, ion.species);
    const double resist_bottom = stack.resist_bottom_nm();
    const bool has_resist = !stack.layers.empty();

    IonOutcome out;
    double e_ev = ion.energy_kev * 1e3;
    double x = ion.x_nm, y = ion.y_nm, z = ion.z_nm;
    double dx = ion.dir_x, dy = ion.dir_y, dz = ion.dir_z;
    bool first_flight = true;

    for (;;) {
        const Medium& med = media[medium_index_at(media, z)];
        if (has_resist && z >= resist_bottom) out.crossed_resist = true;
        const double threshold =
            config.stop_threshold_ev > 0 ? config.stop_threshold_ev : med.displacement_ev;
        if (e_ev < threshold) break; // rests here

        double flight = med.flight_nm;
        if (first_flight) {
            flight *= rng.uniform_pos();
            first_flight = false;
        }

        // truncate at the nearest layer boundary along the flight
        double t_boundary = std::numeric_limits<double>::infinity();
        bool exits = false;
        if (dz > 0 && std::isfinite(med.z_bottom)) {
            t_boundary = (med.z_bottom - z) / dz;
        } else if (dz < 0) {
            t_boundary = (med.z_top - z) / dz;
            exits = med.z_top == 0.0;
        }
        const bool truncated = t_boundary < flight;
        const double step = truncated ? t_boundary : flight;

        double de = med.dedx_coeff * std::sqrt(e_ev * 1e-3) * step;
        if (de > e_ev) de = e_ev;
        e_ev -= de;
        out.electronic_loss_ev += de;
        out.path_length_nm += step;
        x += dx * step;
        y += dy * step;
        z += dz * step;

        if (truncated) {
            if (exits) {
                out.fate = IonFate::backscattered;
                z = 0;
                break;
            }
            // nudge off the interface so the next lookup lands in the new layer
            x += dx * 1e-9;
            y += dy * 1e-9;
            z += dz * 1e-9;
            continue; // new flight, no collision at the crossing
        }

        if (++out.collisions > config.max_collisions)
            throw std::runtime_error("simulate_ion: collision budget exceeded");

        const double p = med.pmax_nm * std::sqrt(rng.uniform());
        const double pick = rng.uniform();
        std::size_t ci = 0;
        while (ci + 1 < med.comps.size() && pick >= med.comps[ci].cum_fraction) ++ci;
        const MediumComponent& comp = med.comps[ci];

        const double eps = comp.pair.eps_per_ev * e_ev;
        const double b = p / comp.pair.a_nm;
        const double s2 = config.use_magic
                              ? magic_sin2_half(eps, b)
                              : sin2_half_reduced(eps, b, config.quadrature_order);
        double transfer = comp.pair.gamma * e_ev * s2;
        if (transfer > e_ev) transfer = e_ev;

        if (transfer >= med.displacement_ev) {
            const double nd = nrt_displacements(transfer - med.binding_ev,
                                                med.displacement_ev, comp);
            const long nv = std::max<long>(1, std::llround(nd));
            out.vacancy_count += nv;
            if (config.record_vacancy_positions)
                for (long k = 0; k < nv; ++k) out.vacancy_positions.push_back({x, y, z});
            out.binding_loss_ev += med.binding_ev;
            out.recoil_loss_ev += transfer - med.binding_ev;
        } else {
            out.recoil_loss_ev += transfer;
        }
        e_ev -= transfer;

        double cos_psi, sin_psi;
        lab_deflection(s2, comp.pair.mu, cos_psi, sin_psi);
        rotate_direction(dx, dy, dz, cos_psi, sin_psi, 2.0 * constants::pi * rng.uniform());
    }

    out.x_nm = x;
    out.y_nm = y;
    out.z_nm = z;
    out.residual_energy_ev = e_ev;
    return out;
}

ImplantResult implant(const std::vector<EntryPoint>& entries, const ApertureMask& mask,
                      const ImplantConfig& config, std::uint64_t seed) {
    mask.validate();
    const std::vector<double> energies =
        split_molecule(config.molecule_energy_kev, {config.ion_a, config.ion_b});
    const Material diamond = builtin_material("diamond");
    const Material pmma = builtin_material("pmma");
    const LayerStack bare = bare_stack(diamond);
    const LayerStack masked = masked_stack(pmma, mask.resist_thickness_nm, diamond);
    const double resist_bottom = masked.resist_bottom_nm();

    struct PairOutcome {
        IonOutcome a, b;
        bool under_resist = false;
    };
    std::vector<PairOutcome> outs(entries.size());

    parallel_for(entries.size(), config.threads, [&](std::size_t i) {
        const EntryPoint& e = entries[i];
        const EntryClass cls = classify_entry(mask, e.x_nm, e.y_nm);
        const LayerStack& stack = cls.open ? bare : masked;
        outs[i].under_resist = !cls.open;
        for (int k = 0; k < 2; ++k) {
            Rng rng(seed, "implant.ion", 2 * i + static_cast<std::size_t>(k));
            IonState state;
            state.species = k == 0 ? config.ion_a : config.ion_b;
            state.energy_kev = energies[static_cast<std::size_t>(k)];
            state.x_nm = e.x_nm;
            state.y_nm = e.y_nm;
            (k == 0 ? outs[i].a : outs[i].b) = simulate_ion(state, stack, config.transport, rng);
        }
    });

    ImplantResult result;
    result.ions_in = 2 * static_cast<long>(entries.size());
    result.initial_energy_ev =
        (energies[0] + energies[1]) * 1e3 * static_cast<double>(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const int aperture = mask.flat_index(entries[i].aperture);
        const bool under_resist = outs[i].under_resist;
        for (const IonOutcome* o : {&outs[i].a, &outs[i].b}) {
            result.electronic_energy_ev += o->electronic_loss_ev;
            result.recoil_energy_ev += o->recoil_loss_ev;
            result.binding_energy_ev += o->binding_loss_ev;
            result.residual_energy_ev += o->residual_energy_ev;
            result.vacancy_count += o->vacancy_count;
            for (const auto& v : o->vacancy_positions)
                result.vacancy_positions.push_back({aperture, v[0], v[1], v[2]});
            if (o->crossed_resist) ++result.transmitted_through_resist_count;
            if (o->fate == IonFate::backscattered) {
                ++result.exited_count;
                continue;
            }
            RestPosition rest;
            rest.species = o == &outs[i].a ? config.ion_a : config.ion_b;
            rest.aperture = aperture;
            rest.x_nm = o->x_nm;
            rest.y_nm = o->y_nm;
            rest.z_nm = o->z_nm;
            rest.in_resist = under_resist && o->z_nm <= resist_bottom;
            result.rest_positions.push_back(rest);
        }
    }
    return result;
}

TransmissionCheck resist_transmission(const ImplantConfig& config, long histories,
                                      std::uint64_t seed) {
    if (histories < 0) throw std::invalid_argument("resist_transmission: negative histories");
    const std::vector<double> energies =
        split_molecule(config.molecule_energy_kev, {config.ion_a, config.ion_b});
    const LayerStack stack = masked_stack(builtin_material("pmma"), config.resist_thickness_nm,
                                          builtin_material("diamond"));

    std::vector<unsigned char> crossed(static_cast<std::size_t>(histories), 0);
    std::vector<unsigned char> exited(static_cast<std::size_t>(histories), 0);
    parallel_for(static_cast<std::size_t>(histories), config.threads, [&](std::size_t i) {
        Rng rng(seed, "blocking", i);
        IonState state;
        state.species = i % 2 == 0 ? config.ion_a : config.ion_b;
        state.energy_kev = energies[i % 2];
        const IonOutcome o = simulate_ion(state, stack, config.transport, rng);
        crossed[i] = o.crossed_resist ? 1 : 0;
        exited[i] = o.fate == IonFate::backscattered ? 1 : 0;
    });

    TransmissionCheck check;
    check.histories = histories;
    for (std::size_t i = 0; i < crossed.size(); ++i) {
        check.transmitted += crossed[i];
        check.exited += exited[i];
    }
    return check;
}

DepthProfile depth_profile(const ImplantResult& result, const Element& species,
                           double bin_width_nm) {
    if (bin_width_nm <= 0) throw std::invalid_argument("depth_profile: bin width <= 0");
    std::vector<const RestPosition*> rests;
    for (const auto& r : result.rest_positions)
        if (r.species.atomic_number == species.atomic_number) rests.push_back(&r);
    if (rests.empty())
        throw std::invalid_argument("depth_profile: no rest positions for species");

    double mx = 0, my = 0, mz = 0;
    for (const auto* r : rests) {
        mx += r->x_nm;
        my += r->y_nm;
        mz += r->z_nm;
    }
    const double n = static_cast<double>(rests.size());
    mx /= n;
    my /= n;
    mz /= n;
    double vx = 0, vy = 0, vz = 0, zmax = 0;
    for (const auto* r : rests) {
        vx += (r->x_nm - mx) * (r->x_nm - mx);
        vy += (r->y_nm - my) * (r->y_nm - my);
        vz += (r->z_nm - mz) * (r->z_nm - mz);
        zmax = std::max(zmax, r->z_nm);
    }
    vx /= n;
    vy /= n;
    vz /= n;

    DepthProfile profile;
    profile.mean_depth_nm = mz;
    profile.longitudinal_straggle_nm = std::sqrt(vz);
    profile.lateral_straggle_nm = std::sqrt(0.5 * (vx + vy));

    const std::size_t nbins =
        static_cast<std::size_t>(std::floor(zmax / bin_width_nm)) + 1;
    profile.bin_edges_nm.resize(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i)
        profile.bin_edges_nm[i] = static_cast<double>(i) * bin_width_nm;
    profile.counts.assign(nbins, 0);
    for (const auto* r : rests) {
        std::size_t k = static_cast<std::size_t>(r->z_nm / bin_width_nm);
        if (k >= nbins) k = nbins - 1;
        ++profile.counts[k];
    }
    return profile;
}

} // namespace nvsim
