// Command-line front end: one binary, one subcommand per pipeline stage plus
// `run` for the whole chain and an offline correlation mode for externally
// recorded timestamp files.
//
// Exit codes: 0 success, 2 usage, 3 config error, 4 stage failure.

#include "nvsim/analysis.hpp"
#include "nvsim/io.hpp"
#include "nvsim/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::uint64_t> histories;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool with_histories) {
    sub->add_option("-c,--config", opts.config_path, "pipeline config file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "override run.seed");
    sub->add_option("-o,--out", opts.out_dir, "override run.out_dir");
    sub->add_option("-t,--threads", opts.threads, "override run.threads")
        ->check(CLI::PositiveNumber);
    if (with_histories)
        sub->add_option("--histories", opts.histories,
                        "fix the total ion-pair count instead of sampling the dose")
            ->check(CLI::PositiveNumber);
}

nvsim::RunContext build_context(const CommonOpts& opts) {
    nvsim::RunContext ctx;
    ctx.report = opts.config_path.empty() ? nvsim::parse_config("", "<defaults>")
                                          : nvsim::parse_config_file(opts.config_path);
    if (opts.seed) {
        ctx.report.config.run.seed = *opts.seed;
        ctx.cli_overrides.push_back("run.seed = " + std::to_string(*opts.seed));
    }
    if (opts.out_dir) {
        ctx.report.config.run.out_dir = *opts.out_dir;
        ctx.cli_overrides.push_back("run.out_dir = " + *opts.out_dir);
    }
    if (opts.threads) {
        ctx.report.config.run.threads = *opts.threads;
        ctx.cli_overrides.push_back("run.threads = " + std::to_string(*opts.threads));
    }
    ctx.histories_override = opts.histories;
    return ctx;
}

// offline mode: correlate a recorded two-detector timestamp file
int analyze_timestamps(const nvsim::RunContext& ctx, const std::string& path,
                       std::optional<double> signal_cps, std::optional<double> background_cps,
                       std::optional<double> rho_flag, const std::string& g2_out) {
    nvsim::PhotonEventStream stream = nvsim::io::read_timestamps_csv(path);
    if (signal_cps) stream.signal_rate_cps = *signal_cps;
    if (background_cps) stream.background_rate_cps = *background_cps;

    const auto& hbt = ctx.config().hbt;
    const nvsim::CorrelationHistogram hist =
        nvsim::correlate(stream, hbt.bin_width_ns, hbt.max_tau_ns);

    double rho = 1.0;
    if (rho_flag) {
        rho = *rho_flag;
    } else if (stream.signal_rate_cps + stream.background_rate_cps > 0) {
        rho = stream.signal_rate_cps / (stream.signal_rate_cps + stream.background_rate_cps);
    }
    const nvsim::G2Curve curve = nvsim::background_correct(hist, rho);

    std::cout << "events_a: " << stream.detector_a_ns.size() << "\n";
    std::cout << "events_b: " << stream.detector_b_ns.size() << "\n";
    std::cout << "duration_ns: " << nvsim::io::format_double(stream.duration_ns) << "\n";
    std::cout << "rho: " << nvsim::io::format_double(rho) << "\n";
    std::cout << "g2_zero: " << nvsim::io::format_double(curve.fit.g2_zero) << " +/- "
              << nvsim::io::format_double(curve.fit.g2_zero_err) << "\n";
    std::cout << "timescale_ns: " << nvsim::io::format_double(curve.fit.timescale_ns) << "\n";
    std::cout << "single_emitter: " << (nvsim::classify_single(curve) ? "yes" : "no") << "\n";
    long n_g2 = 0;
    if (!curve.fit.unphysical && curve.fit.g2_zero < 0.995)
        n_g2 = std::max(1L, std::lround(1.0 / (1.0 - curve.fit.g2_zero)));
    std::cout << "n_g2: " << n_g2 << "\n";

    if (!g2_out.empty()) {
        nvsim::io::G2Record rec;
        rec.histogram = hist;
        rec.signal_cps = stream.signal_rate_cps;
        rec.background_cps = stream.background_rate_cps;
        rec.duration_ns = stream.duration_ns;
        nvsim::io::write_g2_csv(g2_out, rec, curve);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked implantation, center formation, and photon-statistics pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "nvsim 1.0.0");

    CommonOpts opts;
    std::string timestamps_path, g2_out;
    std::optional<double> signal_cps, background_cps, rho_flag;

    CLI::App* cmd_run = app.add_subcommand("run", "all stages in order");
    CLI::App* cmd_implant = app.add_subcommand("implant", "dose sampling and ion transport");
    CLI::App* cmd_form = app.add_subcommand("form", "center formation from implant.csv");
    CLI::App* cmd_scan = app.add_subcommand("scan", "confocal raster and spot detection");
    CLI::App* cmd_hbt = app.add_subcommand("hbt", "photon correlation per occupied site");
    CLI::App* cmd_analyze =
        app.add_subcommand("analyze", "count estimates and array statistics, or an external "
                                      "timestamp file with --timestamps");

    add_common(cmd_run, opts, true);
    add_common(cmd_implant, opts, true);
    add_common(cmd_form, opts, false);
    add_common(cmd_scan, opts, false);
    add_common(cmd_hbt, opts, false);
    add_common(cmd_analyze, opts, false);

    cmd_analyze->add_option("--timestamps", timestamps_path,
                            "two-column time_ns,detector file to correlate instead of the staged "
                            "artifacts")
        ->check(CLI::ExistingFile);
    cmd_analyze->add_option("--signal-cps", signal_cps, "signal rate of the timestamp stream");
    cmd_analyze->add_option("--background-cps", background_cps,
                            "background rate of the timestamp stream");
    cmd_analyze->add_option("--rho", rho_flag, "signal fraction S/(S+B) used for the correction")
        ->check(CLI::Range(0.0, 1.0));
    cmd_analyze->add_option("--g2-out", g2_out, "also write the corrected curve to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const nvsim::RunContext ctx = build_context(opts);
        if (cmd_analyze->parsed() && !timestamps_path.empty())
            return analyze_timestamps(ctx, timestamps_path, signal_cps, background_cps, rho_flag,
                                      g2_out);
        if (cmd_run->parsed()) {
            nvsim::run_pipeline(ctx);
            std::cout << ctx.config().run.out_dir << "/" << nvsim::artifacts::summary << "\n";
        } else if (cmd_implant->parsed()) {
            nvsim::stage_implant(ctx);
        } else if (cmd_form->parsed()) {
            nvsim::stage_form(ctx);
        } else if (cmd_scan->parsed()) {
            nvsim::stage_scan(ctx);
        } else if (cmd_hbt->parsed()) {
            nvsim::stage_hbt(ctx);
        } else if (cmd_analyze->parsed()) {
            nvsim::stage_analyze(ctx);
            std::cout << ctx.config().run.out_dir << "/" << nvsim::artifacts::summary << "\n";
        }
    } catch (const nvsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
