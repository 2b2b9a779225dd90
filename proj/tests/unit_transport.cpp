#include "nvsim/transport.hpp"

#include "nvsim/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace nvsim;

namespace {

struct DepthRun {
    double mean_nm = 0;
    double straggle_nm = 0;
    double mean_path_nm = 0;
    double backscatter_fraction = 0;
    double max_energy_rel_err = 0;
    double vacancies_per_ion = 0;
};

// 4000 nitrogen histories straight down into bare diamond, fixed seeds
DepthRun run_nitrogen(double energy_kev, int n) {
    const LayerStack stack = bare_stack(builtin_material("diamond"));
    const TransportConfig tc;
    DepthRun out;
    std::vector<double> depths;
    depths.reserve(static_cast<std::size_t>(n));
    double path_sum = 0;
    long back = 0, vac = 0;
    for (int i = 0; i < n; ++i) {
        Rng rng(12345, "golden", static_cast<std::uint64_t>(i));
        IonState ion;
        ion.species = elements::nitrogen14;
        ion.energy_kev = energy_kev;
        const IonOutcome o = simulate_ion(ion, stack, tc, rng);
        const double in_ev = energy_kev * 1000.0;
        const double out_ev = o.electronic_loss_ev + o.recoil_loss_ev + o.binding_loss_ev +
                              o.residual_energy_ev;
        out.max_energy_rel_err =
            std::max(out.max_energy_rel_err, std::fabs(out_ev - in_ev) / in_ev);
        if (o.fate == IonFate::backscattered) {
            ++back;
            continue;
        }
        depths.push_back(o.z_nm);
        path_sum += o.path_length_nm;
        vac += o.vacancy_count;
    }
    out.mean_nm = stats::mean(depths);
    out.straggle_nm = stats::stddev(depths);
    out.mean_path_nm = path_sum / static_cast<double>(depths.size());
    out.backscatter_fraction = static_cast<double>(back) / n;
    out.vacancies_per_ion = static_cast<double>(vac) / static_cast<double>(depths.size());
    return out;
}

} // namespace

TEST_CASE("molecular energy split is proportional to mass") {
    const auto e = split_molecule(40.0, {elements::nitrogen14, elements::carbon12});
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(21.540644).epsilon(1e-6));
    CHECK(e[1] == doctest::Approx(18.459356).epsilon(1e-6));
    CHECK(e[0] + e[1] == doctest::Approx(40.0).epsilon(1e-12));

    const auto same = split_molecule(10.0, {elements::carbon12, elements::carbon12});
    CHECK(same[0] == doctest::Approx(5.0));
    CHECK(same[1] == doctest::Approx(5.0));

    CHECK_THROWS_AS(split_molecule(0.0, {elements::nitrogen14}), std::invalid_argument);
    CHECK_THROWS_AS(split_molecule(40.0, {}), std::invalid_argument);
}

TEST_CASE("simulate_ion input validation") {
    const LayerStack stack = bare_stack(builtin_material("diamond"));
    const TransportConfig tc;
    Rng rng(1, "t", 0);
    IonState ion;
    ion.species = elements::nitrogen14;
    ion.energy_kev = 0.0;
    CHECK_THROWS_AS(simulate_ion(ion, stack, tc, rng), std::invalid_argument);
    ion.energy_kev = 20.0;
    ion.dir_z = 2.0;
    CHECK_THROWS_AS(simulate_ion(ion, stack, tc, rng), std::invalid_argument);
    ion.dir_z = 1.0;
    ion.z_nm = -1.0;
    CHECK_THROWS_AS(simulate_ion(ion, stack, tc, rng), std::invalid_argument);
}

TEST_CASE("nitrogen range statistics in diamond") {
    const DepthRun r20 = run_nitrogen(20.0, 4000);

    // regression pins on the fixed-seed run
    CHECK(r20.mean_nm == doctest::Approx(32.6017).epsilon(0.01));
    CHECK(r20.straggle_nm == doctest::Approx(11.3773).epsilon(0.01));
    CHECK(r20.vacancies_per_ion == doctest::Approx(73.02).epsilon(0.02));

    // physical windows for a shallow keV implant
    CHECK(r20.mean_nm > 20.0);
    CHECK(r20.mean_nm < 40.0);
    CHECK(r20.straggle_nm > 5.4);
    CHECK(r20.straggle_nm < 12.6);
    CHECK(r20.backscatter_fraction < 0.01);
    CHECK(r20.max_energy_rel_err < 1e-9);

    // the path length is bounded by the electronic-only travel distance:
    // nuclear collisions can only drain energy faster, never slower
    const Material diamond = builtin_material("diamond");
    double csda_e = 0;
    const int steps = 4000;
    const double e0 = diamond.displacement_energy_ev, e1 = 20000.0;
    for (int i = 0; i < steps; ++i) {
        const double e_ev = e0 + (e1 - e0) * (i + 0.5) / steps;
        csda_e += (e1 - e0) / steps /
                  electronic_stopping_ev_per_nm(diamond, elements::nitrogen14, e_ev / 1000.0);
    }
    CHECK(csda_e == doctest::Approx(148.55).epsilon(0.01));
    CHECK(r20.mean_nm < r20.mean_path_nm);
    CHECK(r20.mean_path_nm < csda_e);
    CHECK(r20.mean_path_nm < 3.0 * r20.mean_nm);
}

TEST_CASE("range grows with energy") {
    const DepthRun r10 = run_nitrogen(10.0, 2000);
    const DepthRun r40 = run_nitrogen(40.0, 2000);
    CHECK(r10.mean_nm == doctest::Approx(16.59).epsilon(0.02));
    CHECK(r40.mean_nm == doctest::Approx(64.23).epsilon(0.02));
    CHECK(r10.mean_nm < 32.6);
    CHECK(r40.mean_nm > 32.6);
    CHECK(r10.straggle_nm < r40.straggle_nm);
}

TEST_CASE("vacancy production of one molecular pair") {
    const LayerStack stack = bare_stack(builtin_material("diamond"));
    const TransportConfig tc;
    const auto energies = split_molecule(40.0, {elements::nitrogen14, elements::carbon12});
    long vac = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 2; ++k) {
            Rng rng(555, "pair", static_cast<std::uint64_t>(2 * i + k));
            IonState ion;
            ion.species = k == 0 ? elements::nitrogen14 : elements::carbon12;
            ion.energy_kev = energies[static_cast<std::size_t>(k)];
            vac += simulate_ion(ion, stack, tc, rng).vacancy_count;
        }
    }
    const double per_pair = static_cast<double>(vac) / n;
    CHECK(per_pair == doctest::Approx(140.04).epsilon(0.02));
    // order of magnitude set by the displacement threshold
    CHECK(per_pair > 100.0);
    CHECK(per_pair < 180.0);
}

TEST_CASE("a 200 nm resist stops the beam") {
    ImplantConfig cfg;
    const TransmissionCheck check = resist_transmission(cfg, 2000, 31);
    CHECK(check.histories == 2000);
    CHECK(check.transmitted == 0);
    CHECK(check.exited < 40); // a small fraction backscatters out of the resist

    // direct look at where masked ions end up
    const LayerStack stack =
        masked_stack(builtin_material("pmma"), 200.0, builtin_material("diamond"));
    const TransportConfig tc;
    for (int i = 0; i < 300; ++i) {
        Rng rng(77, "resist", static_cast<std::uint64_t>(i));
        IonState ion;
        ion.species = elements::nitrogen14;
        ion.energy_kev = 20.0;
        const IonOutcome o = simulate_ion(ion, stack, tc, rng);
        CHECK_FALSE(o.crossed_resist);
        if (o.fate == IonFate::rested) {
            CHECK(o.z_nm > 0.0);
            CHECK(o.z_nm < 200.0);
        }
    }
}

TEST_CASE("implant bookkeeping over a sampled dose") {
    ApertureMask mask;
    mask.rows = 2;
    mask.cols = 2;
    const auto entries = sample_entry_points(mask, 1e12, 99);
    REQUIRE_FALSE(entries.empty());

    ImplantConfig cfg;
    const ImplantResult result = implant(entries, mask, cfg, 99);

    CHECK(result.ions_in == 2 * static_cast<long>(entries.size()));
    CHECK(result.ions_in ==
          static_cast<long>(result.rest_positions.size()) + result.exited_count);
    CHECK(result.transmitted_through_resist_count == 0); // all entries are open

    for (const auto& r : result.rest_positions) {
        CHECK(r.aperture >= 0);
        CHECK(r.aperture < mask.aperture_count());
        CHECK_FALSE(r.in_resist);
        CHECK(r.z_nm >= 0.0);
    }

    const double in = result.initial_energy_ev;
    const double out = result.electronic_energy_ev + result.recoil_energy_ev +
                       result.binding_energy_ev + result.residual_energy_ev;
    CHECK(std::fabs(out - in) / in < 1e-9);

    CHECK(result.vacancy_count > 0);
    CHECK(static_cast<long>(result.vacancy_positions.size()) == result.vacancy_count);

    ImplantConfig no_rec = cfg;
    no_rec.transport.record_vacancy_positions = false;
    const ImplantResult lean = implant(entries, mask, no_rec, 99);
    CHECK(lean.vacancy_positions.empty());
    CHECK(lean.vacancy_count == result.vacancy_count);
}

TEST_CASE("entries under the resist rest inside it and keep their site tag") {
    ApertureMask mask;
    std::vector<EntryPoint> entries;
    entries.push_back({{0, 0}, 0.5 * mask.pitch_nm, 0.0}); // solid resist between sites

    ImplantConfig cfg;
    const ImplantResult result = implant(entries, mask, cfg, 5);
    CHECK(result.transmitted_through_resist_count == 0);
    REQUIRE_FALSE(result.rest_positions.empty());
    for (const auto& r : result.rest_positions) {
        CHECK(r.aperture == 0);
        CHECK(r.in_resist);
        CHECK(r.z_nm <= mask.resist_thickness_nm);
    }
}

TEST_CASE("implant output does not depend on the thread count") {
    ApertureMask mask;
    mask.rows = 2;
    mask.cols = 2;
    const auto entries = sample_entry_points(mask, 1e12, 4);

    ImplantConfig one;
    one.threads = 1;
    ImplantConfig three;
    three.threads = 3;
    const ImplantResult a = implant(entries, mask, one, 4);
    const ImplantResult b = implant(entries, mask, three, 4);

    REQUIRE(a.rest_positions.size() == b.rest_positions.size());
    for (std::size_t i = 0; i < a.rest_positions.size(); ++i) {
        CHECK(a.rest_positions[i].x_nm == b.rest_positions[i].x_nm);
        CHECK(a.rest_positions[i].y_nm == b.rest_positions[i].y_nm);
        CHECK(a.rest_positions[i].z_nm == b.rest_positions[i].z_nm);
        CHECK(a.rest_positions[i].aperture == b.rest_positions[i].aperture);
    }
    CHECK(a.electronic_energy_ev == b.electronic_energy_ev);
    CHECK(a.vacancy_count == b.vacancy_count);
}

TEST_CASE("depth profile moments from a hand-built result") {
    ImplantResult result;
    const double zs[] = {10.0, 20.0, 30.0};
    const double xs[] = {0.0, 3.0, -3.0};
    const double ys[] = {4.0, -4.0, 0.0};
    for (int i = 0; i < 3; ++i)
        result.rest_positions.push_back(
            {elements::nitrogen14, 0, xs[i], ys[i], zs[i], false});
    result.rest_positions.push_back({elements::carbon12, 0, 0.0, 0.0, 500.0, false});

    const DepthProfile p = depth_profile(result, elements::nitrogen14, 1.0);
    CHECK(p.mean_depth_nm == doctest::Approx(20.0));
    CHECK(p.longitudinal_straggle_nm == doctest::Approx(std::sqrt(200.0 / 3.0)));
    // per-axis variances 6 and 32/3, averaged then rooted
    CHECK(p.lateral_straggle_nm == doctest::Approx(std::sqrt(0.5 * (6.0 + 32.0 / 3.0))));
    REQUIRE(p.counts.size() == 31);
    CHECK(p.counts[10] == 1);
    CHECK(p.counts[20] == 1);
    CHECK(p.counts[30] == 1);
    CHECK(p.bin_edges_nm.front() == 0.0);
    CHECK(p.bin_edges_nm.back() == doctest::Approx(31.0));

    CHECK_THROWS_AS(depth_profile(result, elements::hydrogen), std::invalid_argument);
    CHECK_THROWS_AS(depth_profile(result, elements::nitrogen14, 0.0), std::invalid_argument);
}
