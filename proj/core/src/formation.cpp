#include "nvsim/formation.hpp"

#include "nvsim/constants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nvsim {

std::vector<SpotPopulation> form_nv(const ImplantResult& result, int aperture_count,
                                    const YieldModel& model, std::uint64_t seed) {
    if (aperture_count <= 0) throw std::invalid_argument("form_nv: aperture_count <= 0");
    if (model.base_yield < 0 || model.base_yield > 1)
        throw std::invalid_argument("form_nv: base_yield outside [0, 1]");
    if (model.nv_minus_fraction < 0 || model.nv_minus_fraction > 1)
        throw std::invalid_argument("form_nv: nv_minus_fraction outside [0, 1]");
    const bool boosted = model.vacancy_boost > 0;
    if (boosted && result.vacancy_positions.empty() && result.vacancy_count > 0)
        throw std::invalid_argument(
            "form_nv: vacancy_boost needs recorded vacancy positions");

    std::vector<SpotPopulation> spots(static_cast<std::size_t>(aperture_count));
    for (int a = 0; a < aperture_count; ++a) spots[static_cast<std::size_t>(a)].aperture = a;

    // per-site vacancy lists for the local-density boost
    std::vector<std::vector<const VacancySite*>> site_vacancies;
    if (boosted) {
        site_vacancies.resize(static_cast<std::size_t>(aperture_count));
        for (const auto& v : result.vacancy_positions)
            if (v.aperture >= 0 && v.aperture < aperture_count)
                site_vacancies[static_cast<std::size_t>(v.aperture)].push_back(&v);
    }

    std::vector<Rng> streams;
    streams.reserve(static_cast<std::size_t>(aperture_count));
    for (int a = 0; a < aperture_count; ++a)
        streams.emplace_back(seed, "form", static_cast<std::uint64_t>(a));

    const double log_median = std::log(model.brightness_cps);
    const double r2 = model.vacancy_radius_nm * model.vacancy_radius_nm;

    for (const auto& rest : result.rest_positions) {
        if (rest.species.atomic_number != 7) continue; // nitrogen only
        if (rest.in_resist) continue;
        if (rest.aperture < 0 || rest.aperture >= aperture_count) continue;
        Rng& rng = streams[static_cast<std::size_t>(rest.aperture)];

        double p = model.base_yield;
        if (boosted) {
            long local = 0;
            for (const auto* v : site_vacancies[static_cast<std::size_t>(rest.aperture)]) {
                const double dx = v->x_nm - rest.x_nm;
                const double dy = v->y_nm - rest.y_nm;
                const double dz = v->z_nm - rest.z_nm;
                if (dx * dx + dy * dy + dz * dz <= r2) ++local;
            }
            p = std::clamp(model.base_yield * (1.0 + model.vacancy_boost * local), 0.0, 1.0);
        }

        if (rng.uniform() >= p) continue;
        Emitter e;
        e.x_nm = rest.x_nm;
        e.y_nm = rest.y_nm;
        e.z_nm = rest.z_nm;
        e.charge = rng.uniform() < model.nv_minus_fraction ? ChargeState::nv_minus
                                                           : ChargeState::nv_neutral;
        e.brightness_cps = rng.lognormal(log_median, model.brightness_sigma);
        spots[static_cast<std::size_t>(rest.aperture)].emitters.push_back(e);
    }
    return spots;
}

double expected_mean_emitters(double fluence_per_cm2, double aperture_diameter_nm,
                              double base_yield) {
    if (fluence_per_cm2 < 0) throw std::invalid_argument("expected_mean_emitters: fluence < 0");
    if (aperture_diameter_nm <= 0)
        throw std::invalid_argument("expected_mean_emitters: diameter <= 0");
    if (base_yield < 0 || base_yield > 1)
        throw std::invalid_argument("expected_mean_emitters: yield outside [0, 1]");
    const double radius_cm = 0.5 * aperture_diameter_nm * 1e-7;
    return fluence_per_cm2 * constants::pi * radius_cm * radius_cm * base_yield;
}

} // namespace nvsim
