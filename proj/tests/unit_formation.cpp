#include "nvsim/formation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace nvsim;

namespace {

ImplantResult nitrogen_rests_at(int site, std::size_t n, double x = 0, double y = 0,
                                double z = 30) {
    ImplantResult r;
    r.rest_positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        r.rest_positions.push_back({elements::nitrogen14, site, x, y, z, false});
    return r;
}

} // namespace

TEST_CASE("expected emitters per site from dose and conversion") {
    CHECK(expected_mean_emitters(1e12, 80.0, 0.07) == doctest::Approx(3.5185838).epsilon(1e-6));
    CHECK(expected_mean_emitters(0.0, 80.0, 0.07) == doctest::Approx(0.0));
    CHECK_THROWS_AS(expected_mean_emitters(-1.0, 80.0, 0.07), std::invalid_argument);
    CHECK_THROWS_AS(expected_mean_emitters(1e12, 0.0, 0.07), std::invalid_argument);
    CHECK_THROWS_AS(expected_mean_emitters(1e12, 80.0, 1.5), std::invalid_argument);
}

TEST_CASE("conversion is a Bernoulli thinning of the nitrogen rests") {
    const std::size_t n = 50000;
    const ImplantResult result = nitrogen_rests_at(0, n);
    YieldModel model; // base_yield 0.07

    const auto spots = form_nv(result, 1, model, 2024);
    REQUIRE(spots.size() == 1);
    const auto& emitters = spots[0].emitters;

    const double expected = static_cast<double>(n) * model.base_yield;
    const double sigma = std::sqrt(expected * (1.0 - model.base_yield));
    CHECK(std::fabs(static_cast<double>(emitters.size()) - expected) < 3.0 * sigma);

    // emitters inherit the rest position untouched
    for (const auto& e : emitters) {
        CHECK(e.x_nm == 0.0);
        CHECK(e.y_nm == 0.0);
        CHECK(e.z_nm == 30.0);
    }

    // charge split
    const auto minus = static_cast<double>(
        std::count_if(emitters.begin(), emitters.end(),
                      [](const Emitter& e) { return e.charge == ChargeState::nv_minus; }));
    const double m = static_cast<double>(emitters.size());
    CHECK(std::fabs(minus / m - model.nv_minus_fraction) <
          3.0 * std::sqrt(model.nv_minus_fraction * (1.0 - model.nv_minus_fraction) / m));

    // log-normal brightness: median at the configured value, spread at sigma
    std::vector<double> logs;
    logs.reserve(emitters.size());
    for (const auto& e : emitters) logs.push_back(std::log(e.brightness_cps));
    std::sort(logs.begin(), logs.end());
    const double median = std::exp(logs[logs.size() / 2]);
    CHECK(median == doctest::Approx(model.brightness_cps).epsilon(0.02));
    double lm = 0;
    for (double v : logs) lm += v;
    lm /= static_cast<double>(logs.size());
    double lv = 0;
    for (double v : logs) lv += (v - lm) * (v - lm);
    CHECK(std::sqrt(lv / static_cast<double>(logs.size())) ==
          doctest::Approx(model.brightness_sigma).epsilon(0.05));
}

TEST_CASE("only substrate nitrogen tied to a site can convert") {
    ImplantResult result;
    result.rest_positions.push_back({elements::nitrogen14, 0, 0, 0, 30, false}); // valid
    result.rest_positions.push_back({elements::carbon12, 0, 0, 0, 30, false});   // wrong species
    result.rest_positions.push_back({elements::nitrogen14, 0, 0, 0, 100, true}); // in resist
    result.rest_positions.push_back({elements::nitrogen14, -1, 0, 0, 30, false}); // no site
    result.rest_positions.push_back({elements::nitrogen14, 9, 0, 0, 30, false});  // out of range

    YieldModel certain;
    certain.base_yield = 1.0;
    const auto spots = form_nv(result, 2, certain, 1);
    REQUIRE(spots.size() == 2);
    CHECK(spots[0].emitters.size() == 1);
    CHECK(spots[1].emitters.empty());

    YieldModel never;
    never.base_yield = 0.0;
    const auto none = form_nv(result, 2, never, 1);
    CHECK(none[0].emitters.empty());
}

TEST_CASE("every site gets a population, occupied or not") {
    const ImplantResult result = nitrogen_rests_at(3, 200);
    YieldModel model;
    const auto spots = form_nv(result, 6, model, 7);
    REQUIRE(spots.size() == 6);
    for (int a = 0; a < 6; ++a) {
        CHECK(spots[static_cast<std::size_t>(a)].aperture == a);
        if (a != 3) CHECK(spots[static_cast<std::size_t>(a)].emitters.empty());
    }
    CHECK_FALSE(spots[3].emitters.empty());
}

TEST_CASE("formation depends on per-site rest order, not global order") {
    // interleaving rests of two sites must not change either site's outcome
    ImplantResult grouped;
    for (int i = 0; i < 40; ++i)
        grouped.rest_positions.push_back({elements::nitrogen14, 0, 0, 0, 10.0 + i, false});
    for (int i = 0; i < 40; ++i)
        grouped.rest_positions.push_back({elements::nitrogen14, 1, 0, 0, 10.0 + i, false});

    ImplantResult interleaved;
    for (int i = 0; i < 40; ++i) {
        interleaved.rest_positions.push_back({elements::nitrogen14, 0, 0, 0, 10.0 + i, false});
        interleaved.rest_positions.push_back({elements::nitrogen14, 1, 0, 0, 10.0 + i, false});
    }

    YieldModel model;
    model.base_yield = 0.5;
    const auto a = form_nv(grouped, 2, model, 99);
    const auto b = form_nv(interleaved, 2, model, 99);
    for (int s = 0; s < 2; ++s) {
        REQUIRE(a[static_cast<std::size_t>(s)].emitters.size() ==
                b[static_cast<std::size_t>(s)].emitters.size());
        for (std::size_t i = 0; i < a[static_cast<std::size_t>(s)].emitters.size(); ++i) {
            CHECK(a[static_cast<std::size_t>(s)].emitters[i].z_nm ==
                  b[static_cast<std::size_t>(s)].emitters[i].z_nm);
            CHECK(a[static_cast<std::size_t>(s)].emitters[i].brightness_cps ==
                  b[static_cast<std::size_t>(s)].emitters[i].brightness_cps);
        }
    }

    // and the whole thing is reproducible
    const auto c = form_nv(grouped, 2, model, 99);
    CHECK(c[0].emitters.size() == a[0].emitters.size());
}

TEST_CASE("vacancy boost raises the local acceptance") {
    const std::size_t n = 20000;
    ImplantResult result = nitrogen_rests_at(0, n);
    // three vacancies inside the 10 nm neighborhood, one just outside
    result.vacancy_positions.push_back({0, 0, 0, 25});
    result.vacancy_positions.push_back({0, 5, 0, 30});
    result.vacancy_positions.push_back({0, 0, -5, 35});
    result.vacancy_positions.push_back({0, 0, 0, 41.5});
    result.vacancy_count = 4;

    YieldModel model;
    model.vacancy_boost = 1.0; // p = 0.07 * (1 + 3) = 0.28
    const auto spots = form_nv(result, 1, model, 12);
    const double frac = static_cast<double>(spots[0].emitters.size()) / static_cast<double>(n);
    const double p = 0.28;
    CHECK(std::fabs(frac - p) < 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)));

    // acceptance saturates at 1
    YieldModel huge = model;
    huge.vacancy_boost = 1e6;
    const auto all = form_nv(result, 1, huge, 12);
    CHECK(all[0].emitters.size() == n);
}

TEST_CASE("boost without recorded vacancy positions is an error") {
    ImplantResult result = nitrogen_rests_at(0, 10);
    result.vacancy_count = 50; // counted but not recorded
    YieldModel model;
    model.vacancy_boost = 0.5;
    CHECK_THROWS_AS(form_nv(result, 1, model, 1), std::invalid_argument);

    CHECK_THROWS_AS(form_nv(result, 0, YieldModel{}, 1), std::invalid_argument);
    YieldModel bad;
    bad.base_yield = 1.5;
    CHECK_THROWS_AS(form_nv(result, 1, bad, 1), std::invalid_argument);
}
