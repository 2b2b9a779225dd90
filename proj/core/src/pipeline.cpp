#include "nvsim/pipeline.hpp"

#include "nvsim/analysis.hpp"
#include "nvsim/imaging.hpp"
#include "nvsim/io.hpp"
#include "nvsim/parallel.hpp"
#include "nvsim/rng.hpp"
#include "nvsim/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace nvsim {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& stage, const std::string& msg) {
    throw PipelineError(stage + ": " + msg);
}

template <typename Fn>
void guarded(const char* stage, Fn&& fn) {
    try {
        fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        fail(stage, e.what());
    }
}

fs::path artifact_path(const RunContext& ctx, const char* name) {
    return fs::path(ctx.config().run.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::out | std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
}

ordered_json read_json(const fs::path& path, const char* producer_hint) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open (" + producer_hint + ")");
    return ordered_json::parse(in);
}

// Every stage stamps the same metadata, so a partially executed directory
// still records exactly what produced it.
void prepare_out_dir(const RunContext& ctx) {
    fs::create_directories(ctx.config().run.out_dir);
    ordered_json meta;
    meta["config"] = serialize_config(ctx.config());
    meta["defaulted_keys"] = ctx.report.defaulted_keys;
    meta["cli_overrides"] = ctx.cli_overrides;
    if (ctx.histories_override)
        meta["histories_override"] = *ctx.histories_override;
    else
        meta["histories_override"] = nullptr;
    write_text(artifact_path(ctx, artifacts::metadata), meta.dump(2) + "\n");
}

double expected_ions_per_site(const RunContext& ctx) {
    const auto& cfg = ctx.config();
    if (ctx.histories_override)
        return static_cast<double>(*ctx.histories_override) / cfg.mask.aperture_count();
    return expected_ions_per_aperture(cfg.mask, cfg.fluence_per_cm2);
}

} // namespace

std::string g2_filename(int row, int col) {
    return "g2_r" + std::to_string(row) + "_c" + std::to_string(col) + ".csv";
}

void stage_implant(const RunContext& ctx) {
    guarded("implant", [&] {
        const auto& cfg = ctx.config();
        prepare_out_dir(ctx);

        std::vector<EntryPoint> entries;
        if (ctx.histories_override)
            entries = sample_entry_points_total(cfg.mask, *ctx.histories_override, cfg.run.seed);
        else
            entries = sample_entry_points(cfg.mask, cfg.fluence_per_cm2, cfg.run.seed);

        ImplantConfig icfg;
        icfg.molecule_energy_kev = cfg.molecule_energy_kev;
        icfg.resist_thickness_nm = cfg.mask.resist_thickness_nm;
        icfg.transport = cfg.transport;
        icfg.threads = cfg.run.threads;

        const ImplantResult result = implant(entries, cfg.mask, icfg, cfg.run.seed);

        io::write_implant_csv(artifact_path(ctx, artifacts::implant).string(),
                              result.rest_positions, cfg.mask);
        if (cfg.transport.record_vacancy_positions)
            io::write_vacancies_csv(artifact_path(ctx, artifacts::vacancies).string(),
                                    result.vacancy_positions, cfg.mask);

        // nitrogen rest statistics, lateral spread taken about the aperture
        // centers so it stays meaningful across the whole array
        std::vector<double> depths;
        double lateral_sq = 0;
        for (const auto& r : result.rest_positions) {
            if (r.species.atomic_number != elements::nitrogen14.atomic_number || r.in_resist)
                continue;
            depths.push_back(r.z_nm);
            if (r.aperture >= 0) {
                const ApertureIndex idx{r.aperture / cfg.mask.cols, r.aperture % cfg.mask.cols};
                const double dx = r.x_nm - cfg.mask.center_x_nm(idx);
                const double dy = r.y_nm - cfg.mask.center_y_nm(idx);
                lateral_sq += 0.5 * (dx * dx + dy * dy);
            }
        }

        ordered_json stats;
        stats["entries"] = entries.size();
        stats["ions_in"] = result.ions_in;
        stats["rested"] = result.rest_positions.size();
        stats["exited"] = result.exited_count;
        stats["transmitted_through_resist"] = result.transmitted_through_resist_count;
        stats["vacancies"] = result.vacancy_count;
        stats["energy_ev"] = {{"initial", result.initial_energy_ev},
                              {"electronic", result.electronic_energy_ev},
                              {"recoil", result.recoil_energy_ev},
                              {"binding", result.binding_energy_ev},
                              {"residual", result.residual_energy_ev}};
        ordered_json depth;
        depth["rested_nitrogen"] = depths.size();
        depth["mean_nm"] = depths.empty() ? 0.0 : stats::mean(depths);
        depth["straggle_nm"] = depths.size() < 2 ? 0.0 : stats::stddev(depths);
        depth["lateral_nm"] = depths.empty() ? 0.0 : std::sqrt(lateral_sq / depths.size());
        stats["depth"] = depth;

        if (cfg.masked_check_histories > 0) {
            const TransmissionCheck check =
                resist_transmission(icfg, cfg.masked_check_histories, cfg.run.seed);
            stats["blocking"] = {{"histories", check.histories},
                                 {"transmitted", check.transmitted},
                                 {"fraction", check.histories > 0
                                                  ? static_cast<double>(check.transmitted) /
                                                        check.histories
                                                  : 0.0}};
        } else {
            stats["blocking"] = nullptr;
        }

        write_text(artifact_path(ctx, artifacts::implant_stats), stats.dump(2) + "\n");
    });
}

void stage_form(const RunContext& ctx) {
    guarded("form", [&] {
        const auto& cfg = ctx.config();
        prepare_out_dir(ctx);

        ImplantResult result;
        result.rest_positions = io::read_implant_csv(
            artifact_path(ctx, artifacts::implant).string(), cfg.mask);

        const fs::path vac = artifact_path(ctx, artifacts::vacancies);
        if (fs::exists(vac))
            result.vacancy_positions = io::read_vacancies_csv(vac.string(), cfg.mask);
        else if (cfg.yield.vacancy_boost > 0)
            fail("form", "formation.vacancy_boost needs " + vac.string() +
                             "; rerun implant with implant.record_vacancies = true");

        const auto populations =
            form_nv(result, cfg.mask.aperture_count(), cfg.yield, cfg.run.seed);
        io::write_spots_csv(artifact_path(ctx, artifacts::spots).string(), populations, cfg.mask);
    });
}

void stage_scan(const RunContext& ctx) {
    guarded("scan", [&] {
        const auto& cfg = ctx.config();
        prepare_out_dir(ctx);

        const auto populations =
            io::read_spots_csv(artifact_path(ctx, artifacts::spots).string(), cfg.mask);
        const ScanExtent extent = mask_extent(cfg.mask, cfg.imaging.margin_nm);
        const ScanImage image = render_scan(populations, cfg.imaging, extent, cfg.run.seed);

        io::write_scan_csv(artifact_path(ctx, artifacts::scan_csv).string(), image);
        io::write_scan_pgm(artifact_path(ctx, artifacts::scan_pgm).string(), image);

        const auto detections = detect_spots(image, cfg.imaging.detect_threshold);
        io::write_detections_csv(artifact_path(ctx, artifacts::detections).string(), detections);
    });
}

void stage_hbt(const RunContext& ctx) {
    guarded("hbt", [&] {
        const auto& cfg = ctx.config();
        if (!cfg.hbt.enabled) return;
        prepare_out_dir(ctx);

        const auto populations =
            io::read_spots_csv(artifact_path(ctx, artifacts::spots).string(), cfg.mask);

        std::vector<int> occupied;
        for (const auto& pop : populations)
            if (!pop.emitters.empty()) occupied.push_back(pop.aperture);

        const fs::path dir = artifact_path(ctx, artifacts::g2_dir);
        fs::create_directories(dir);

        EmitterDynamics base;
        base.excited_lifetime_ns = cfg.hbt.excited_lifetime_ns;
        base.pump_rate_per_ns = cfg.hbt.pump_rate_per_ns;

        struct SiteResult {
            io::G2Record record;
            G2Curve curve;
        };
        std::vector<SiteResult> results(occupied.size());

        parallel_for(occupied.size(), cfg.run.threads, [&](std::size_t i) {
            const int flat = occupied[i];
            const auto& pop = populations[static_cast<std::size_t>(flat)];
            const int row = flat / cfg.mask.cols;
            const int col = flat % cfg.mask.cols;
            try {
                std::vector<EmitterDynamics> dynamics;
                dynamics.reserve(pop.emitters.size());
                for (const auto& em : pop.emitters)
                    dynamics.push_back(dynamics_for_brightness(em.brightness_cps, base));

                const PhotonEventStream stream = simulate_stream(
                    dynamics, cfg.hbt.background_cps, cfg.hbt.duration_s,
                    derive_seed(cfg.run.seed, "hbt", static_cast<std::uint64_t>(flat)),
                    cfg.hbt.jitter_sigma_ns);
                const CorrelationHistogram hist =
                    correlate(stream, cfg.hbt.bin_width_ns, cfg.hbt.max_tau_ns);

                auto& out = results[i];
                out.curve = background_correct(hist);
                out.record.row = row;
                out.record.col = col;
                out.record.histogram = hist;
                out.record.signal_cps = stream.signal_rate_cps;
                out.record.background_cps = stream.background_rate_cps;
                out.record.duration_ns = stream.duration_ns;
            } catch (const PipelineError&) {
                throw;
            } catch (const std::exception& e) {
                fail("hbt", "site (" + std::to_string(row) + ", " + std::to_string(col) +
                                "): " + e.what());
            }
        });

        for (const auto& r : results)
            io::write_g2_csv((dir / g2_filename(r.record.row, r.record.col)).string(), r.record,
                             r.curve);
    });
}

void stage_analyze(const RunContext& ctx) {
    guarded("analyze", [&] {
        const auto& cfg = ctx.config();
        prepare_out_dir(ctx);

        const auto detections =
            io::read_detections_csv(artifact_path(ctx, artifacts::detections).string());
        const ordered_json istats = read_json(artifact_path(ctx, artifacts::implant_stats),
                                              "run the implant stage first");

        // nearest-site association within a quarter pitch
        const double radius = 0.25 * cfg.mask.pitch_nm;
        const int sites = cfg.mask.aperture_count();
        std::vector<int> site_detection(static_cast<std::size_t>(sites), -1);
        std::vector<double> site_distance(static_cast<std::size_t>(sites), 0.0);
        for (std::size_t d = 0; d < detections.size(); ++d) {
            const auto& spot = detections[d];
            const auto clamp_idx = [](double v, int n) {
                return std::min(std::max(static_cast<int>(std::lround(v)), 0), n - 1);
            };
            const int col =
                clamp_idx((spot.x_nm - cfg.mask.origin_x_nm) / cfg.mask.pitch_nm, cfg.mask.cols);
            const int row =
                clamp_idx((spot.y_nm - cfg.mask.origin_y_nm) / cfg.mask.pitch_nm, cfg.mask.rows);
            const ApertureIndex idx{row, col};
            const double dx = spot.x_nm - cfg.mask.center_x_nm(idx);
            const double dy = spot.y_nm - cfg.mask.center_y_nm(idx);
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist > radius) continue;
            const auto flat = static_cast<std::size_t>(cfg.mask.flat_index(idx));
            if (site_detection[flat] < 0 || dist < site_distance[flat]) {
                site_detection[flat] = static_cast<int>(d);
                site_distance[flat] = dist;
            }
        }

        // per-site correlation curves, where the correlation stage left them
        struct SiteCurve {
            bool present = false;
            G2Curve curve;
            double signal_cps = 0;
        };
        std::vector<SiteCurve> curves(static_cast<std::size_t>(sites));
        if (cfg.hbt.enabled) {
            const fs::path dir = artifact_path(ctx, artifacts::g2_dir);
            for (int flat = 0; flat < sites; ++flat) {
                if (site_detection[static_cast<std::size_t>(flat)] < 0) continue;
                const fs::path file =
                    dir / g2_filename(flat / cfg.mask.cols, flat % cfg.mask.cols);
                if (!fs::exists(file)) continue;
                const io::G2Record rec = io::read_g2_csv(file.string());
                auto& sc = curves[static_cast<std::size_t>(flat)];
                sc.present = true;
                sc.curve = background_correct(rec.histogram);
                sc.signal_cps = rec.signal_cps;
            }
        }

        // single-emitter level: configured, or bootstrapped from certified singles
        double single_cps = cfg.analysis.single_emitter_cps;
        bool single_derived = false;
        if (cfg.analysis.derive_single && cfg.hbt.enabled) {
            std::vector<double> singles;
            for (int flat = 0; flat < sites; ++flat) {
                const auto& sc = curves[static_cast<std::size_t>(flat)];
                const int d = site_detection[static_cast<std::size_t>(flat)];
                if (d >= 0 && sc.present && classify_single(sc.curve))
                    singles.push_back(detections[static_cast<std::size_t>(d)].flux_cps);
            }
            if (singles.size() >= 3) {
                single_cps = single_emitter_intensity(singles);
                single_derived = true;
            }
        }

        std::vector<long> counts(static_cast<std::size_t>(sites), 0);
        ordered_json per_spot = ordered_json::array();
        int occupied_sites = 0;
        for (int flat = 0; flat < sites; ++flat) {
            const int d = site_detection[static_cast<std::size_t>(flat)];
            if (d < 0) continue;
            ++occupied_sites;
            const auto& sc = curves[static_cast<std::size_t>(flat)];
            const double flux = detections[static_cast<std::size_t>(d)].flux_cps;
            const EstimateMethod method =
                sc.present ? cfg.analysis.method : EstimateMethod::intensity;
            SpotEstimate est = estimate_count(sc.present ? sc.curve : G2Curve{}, flux,
                                              single_cps, method);
            est.aperture = flat;
            counts[static_cast<std::size_t>(flat)] = est.n_hat;

            ordered_json entry;
            entry["row"] = flat / cfg.mask.cols;
            entry["col"] = flat % cfg.mask.cols;
            entry["n_hat"] = est.n_hat;
            entry["n_g2"] = est.n_g2;
            entry["n_intensity"] = est.n_intensity;
            entry["method"] = method == EstimateMethod::g2          ? "g2"
                              : method == EstimateMethod::intensity ? "intensity"
                                                                    : "combined";
            entry["confidence"] = est.confidence;
            if (sc.present) {
                entry["g2_zero"] = sc.curve.fit.g2_zero;
                entry["g2_zero_err"] = sc.curve.fit.g2_zero_err;
            } else {
                entry["g2_zero"] = nullptr;
                entry["g2_zero_err"] = nullptr;
            }
            entry["signal_cps"] = flux;
            per_spot.push_back(entry);
        }

        const PoissonFit poisson = fit_poisson(counts);
        const double expected_ions = expected_ions_per_site(ctx);
        const double yield =
            expected_ions > 0 ? yield_from_statistics(poisson.mle_mean, expected_ions) : 0.0;

        double pitch = 0.0;
        try {
            pitch = estimate_pitch(detections);
        } catch (const std::exception&) {
            pitch = 0.0; // too few spots to see the lattice
        }

        ordered_json summary;
        summary["expected_ions_per_aperture"] = expected_ions;
        summary["expected_mean_emitters"] =
            ctx.histories_override
                ? expected_ions * cfg.yield.base_yield
                : expected_mean_emitters(cfg.fluence_per_cm2, cfg.mask.aperture_diameter_nm,
                                         cfg.yield.base_yield);
        summary["sites"] = sites;
        summary["occupied_sites"] = occupied_sites;
        summary["detected_spots"] = detections.size();
        summary["poisson"] = {{"samples", poisson.samples},   {"mle_mean", poisson.mle_mean},
                              {"chi_square", poisson.chi_square}, {"dof", poisson.dof},
                              {"p_value", poisson.p_value},   {"degenerate", poisson.degenerate}};
        summary["yield"] = yield;
        summary["single_emitter_cps_used"] = single_cps;
        summary["single_emitter_cps_derived"] = single_derived;
        summary["pitch_nm"] = pitch;
        summary["empty_fraction"] = empty_fraction(detections, cfg.mask, radius);
        summary["depth"] = istats.contains("depth") ? istats["depth"] : ordered_json(nullptr);
        summary["blocking"] =
            istats.contains("blocking") ? istats["blocking"] : ordered_json(nullptr);
        summary["counts"] = counts;
        summary["per_spot"] = per_spot;

        write_text(artifact_path(ctx, artifacts::summary), summary.dump(2) + "\n");
    });
}

void run_pipeline(const RunContext& ctx) {
    stage_implant(ctx);
    stage_form(ctx);
    stage_scan(ctx);
    stage_hbt(ctx); // no-op when disabled
    stage_analyze(ctx);
}

} // namespace nvsim
