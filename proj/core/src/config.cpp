#include "nvsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nvsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

[[noreturn]] void fail(const std::string& src, int line, const std::string& msg) {
    throw ConfigError(src + ":" + std::to_string(line) + ": " + msg);
}

struct KeyBinding {
    std::function<void(PipelineConfig&, const std::string& value, const std::string& src, int line)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

double parse_double(const std::string& v, const std::string& key, const std::string& src, int line) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        fail(src, line, "invalid real value for '" + key + "': " + v);
    return x;
}

long long parse_int(const std::string& v, const std::string& key, const std::string& src, int line) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty())
        fail(src, line, "invalid integer value for '" + key + "': " + v);
    return x;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key, const std::string& src, int line) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || v[0] == '-')
        fail(src, line, "invalid seed value for '" + key + "': " + v);
    return x;
}

bool parse_bool(const std::string& v, const std::string& key, const std::string& src, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(src, line, "invalid boolean value for '" + key + "' (use true/false): " + v);
}

const char* method_name(EstimateMethod m) {
    switch (m) {
    case EstimateMethod::g2: return "g2";
    case EstimateMethod::intensity: return "intensity";
    case EstimateMethod::combined: return "combined";
    }
    return "combined";
}

// registry: canonical section order, then key order within a section
const std::vector<std::pair<std::string, std::vector<std::string>>>& section_layout() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> layout = {
        {"run", {"seed", "threads", "out_dir"}},
        {"mask",
         {"aperture_diameter_nm", "pitch_nm", "rows", "cols", "resist_thickness_nm",
          "fluence_per_cm2"}},
        {"implant",
         {"molecule_energy_kev", "quadrature_order", "use_magic", "stop_threshold_ev",
          "masked_check_histories", "record_vacancies"}},
        {"formation",
         {"base_yield", "vacancy_boost", "vacancy_radius_nm", "nv_minus_fraction",
          "brightness_cps", "brightness_sigma"}},
        {"imaging",
         {"psf_sigma_nm", "pixel_size_nm", "background_cps", "dwell_time_s", "dwell_noise",
          "margin_nm", "detect_threshold"}},
        {"hbt",
         {"enabled", "duration_s", "excited_lifetime_ns", "pump_rate_per_ns", "background_cps",
          "bin_width_ns", "max_tau_ns", "jitter_sigma_ns"}},
        {"analysis", {"method", "single_emitter_cps", "derive_single"}},
    };
    return layout;
}

const std::map<std::string, KeyBinding>& bindings() {
    static const std::map<std::string, KeyBinding> map = [] {
        std::map<std::string, KeyBinding> b;
        auto bind_double = [&b](const char* path, auto accessor) {
            b[path] = KeyBinding{
                [accessor, path](PipelineConfig& c, const std::string& v, const std::string& s, int l) {
                    accessor(c) = parse_double(v, path, s, l);
                },
                [accessor](const PipelineConfig& c) {
                    return format_double(accessor(const_cast<PipelineConfig&>(c)));
                }};
        };
        auto bind_int = [&b](const char* path, auto accessor) {
            b[path] = KeyBinding{
                [accessor, path](PipelineConfig& c, const std::string& v, const std::string& s, int l) {
                    const long long x = parse_int(v, path, s, l);
                    accessor(c) = static_cast<int>(x);
                    if (static_cast<long long>(accessor(c)) != x) fail(s, l, std::string(path) + " out of range");
                },
                [accessor](const PipelineConfig& c) {
                    return std::to_string(accessor(const_cast<PipelineConfig&>(c)));
                }};
        };
        auto bind_bool = [&b](const char* path, auto accessor) {
            b[path] = KeyBinding{
                [accessor, path](PipelineConfig& c, const std::string& v, const std::string& s, int l) {
                    accessor(c) = parse_bool(v, path, s, l);
                },
                [accessor](const PipelineConfig& c) {
                    return accessor(const_cast<PipelineConfig&>(c)) ? "true" : "false";
                }};
        };

        b["run.seed"] = KeyBinding{
            [](PipelineConfig& c, const std::string& v, const std::string& s, int l) {
                c.run.seed = parse_u64(v, "run.seed", s, l);
            },
            [](const PipelineConfig& c) { return std::to_string(c.run.seed); }};
        bind_int("run.threads", [](PipelineConfig& c) -> int& { return c.run.threads; });
        b["run.out_dir"] = KeyBinding{
            [](PipelineConfig& c, const std::string& v, const std::string&, int) { c.run.out_dir = v; },
            [](const PipelineConfig& c) { return c.run.out_dir; }};

        bind_double("mask.aperture_diameter_nm",
                    [](PipelineConfig& c) -> double& { return c.mask.aperture_diameter_nm; });
        bind_double("mask.pitch_nm", [](PipelineConfig& c) -> double& { return c.mask.pitch_nm; });
        bind_int("mask.rows", [](PipelineConfig& c) -> int& { return c.mask.rows; });
        bind_int("mask.cols", [](PipelineConfig& c) -> int& { return c.mask.cols; });
        bind_double("mask.resist_thickness_nm",
                    [](PipelineConfig& c) -> double& { return c.mask.resist_thickness_nm; });
        bind_double("mask.fluence_per_cm2",
                    [](PipelineConfig& c) -> double& { return c.fluence_per_cm2; });

        bind_double("implant.molecule_energy_kev",
                    [](PipelineConfig& c) -> double& { return c.molecule_energy_kev; });
        bind_int("implant.quadrature_order",
                 [](PipelineConfig& c) -> int& { return c.transport.quadrature_order; });
        bind_bool("implant.use_magic", [](PipelineConfig& c) -> bool& { return c.transport.use_magic; });
        bind_double("implant.stop_threshold_ev",
                    [](PipelineConfig& c) -> double& { return c.transport.stop_threshold_ev; });
        bind_int("implant.masked_check_histories",
                 [](PipelineConfig& c) -> int& { return c.masked_check_histories; });
        bind_bool("implant.record_vacancies",
                  [](PipelineConfig& c) -> bool& { return c.transport.record_vacancy_positions; });

        bind_double("formation.base_yield", [](PipelineConfig& c) -> double& { return c.yield.base_yield; });
        bind_double("formation.vacancy_boost",
                    [](PipelineConfig& c) -> double& { return c.yield.vacancy_boost; });
        bind_double("formation.vacancy_radius_nm",
                    [](PipelineConfig& c) -> double& { return c.yield.vacancy_radius_nm; });
        bind_double("formation.nv_minus_fraction",
                    [](PipelineConfig& c) -> double& { return c.yield.nv_minus_fraction; });
        bind_double("formation.brightness_cps",
                    [](PipelineConfig& c) -> double& { return c.yield.brightness_cps; });
        bind_double("formation.brightness_sigma",
                    [](PipelineConfig& c) -> double& { return c.yield.brightness_sigma; });

        bind_double("imaging.psf_sigma_nm",
                    [](PipelineConfig& c) -> double& { return c.imaging.psf_sigma_nm; });
        bind_double("imaging.pixel_size_nm",
                    [](PipelineConfig& c) -> double& { return c.imaging.pixel_size_nm; });
        bind_double("imaging.background_cps",
                    [](PipelineConfig& c) -> double& { return c.imaging.background_cps; });
        bind_double("imaging.dwell_time_s",
                    [](PipelineConfig& c) -> double& { return c.imaging.dwell_time_s; });
        bind_bool("imaging.dwell_noise", [](PipelineConfig& c) -> bool& { return c.imaging.dwell_noise; });
        bind_double("imaging.margin_nm", [](PipelineConfig& c) -> double& { return c.imaging.margin_nm; });
        bind_double("imaging.detect_threshold",
                    [](PipelineConfig& c) -> double& { return c.imaging.detect_threshold; });

        bind_bool("hbt.enabled", [](PipelineConfig& c) -> bool& { return c.hbt.enabled; });
        bind_double("hbt.duration_s", [](PipelineConfig& c) -> double& { return c.hbt.duration_s; });
        bind_double("hbt.excited_lifetime_ns",
                    [](PipelineConfig& c) -> double& { return c.hbt.excited_lifetime_ns; });
        bind_double("hbt.pump_rate_per_ns",
                    [](PipelineConfig& c) -> double& { return c.hbt.pump_rate_per_ns; });
        bind_double("hbt.background_cps",
                    [](PipelineConfig& c) -> double& { return c.hbt.background_cps; });
        bind_double("hbt.bin_width_ns", [](PipelineConfig& c) -> double& { return c.hbt.bin_width_ns; });
        bind_double("hbt.max_tau_ns", [](PipelineConfig& c) -> double& { return c.hbt.max_tau_ns; });
        bind_double("hbt.jitter_sigma_ns",
                    [](PipelineConfig& c) -> double& { return c.hbt.jitter_sigma_ns; });

        b["analysis.method"] = KeyBinding{
            [](PipelineConfig& c, const std::string& v, const std::string& s, int l) {
                if (v == "g2") c.analysis.method = EstimateMethod::g2;
                else if (v == "intensity") c.analysis.method = EstimateMethod::intensity;
                else if (v == "combined") c.analysis.method = EstimateMethod::combined;
                else fail(s, l, "invalid method '" + v + "' (use g2, intensity, or combined)");
            },
            [](const PipelineConfig& c) { return std::string(method_name(c.analysis.method)); }};
        bind_double("analysis.single_emitter_cps",
                    [](PipelineConfig& c) -> double& { return c.analysis.single_emitter_cps; });
        bind_bool("analysis.derive_single",
                  [](PipelineConfig& c) -> bool& { return c.analysis.derive_single; });
        return b;
    }();
    return map;
}

void validate_semantics(const PipelineConfig& c, const std::string& src) {
    auto bad = [&](const std::string& msg) { throw ConfigError(src + ": " + msg); };
    if (c.run.threads < 1) bad("run.threads must be at least 1");
    if (c.mask.rows < 1 || c.mask.cols < 1) bad("mask dimensions must be at least 1x1");
    if (c.fluence_per_cm2 < 0) bad("mask.fluence_per_cm2 must be nonnegative");
    if (c.molecule_energy_kev <= 0) bad("implant.molecule_energy_kev must be positive");
    if (c.transport.quadrature_order < 2) bad("implant.quadrature_order must be at least 2");
    if (c.masked_check_histories < 0) bad("implant.masked_check_histories must be nonnegative");
    if (c.hbt.enabled && c.hbt.duration_s <= 0) bad("hbt.duration_s must be positive");
    if (c.hbt.enabled && (c.hbt.bin_width_ns <= 0 || c.hbt.max_tau_ns <= 0))
        bad("hbt bin and window widths must be positive");
    if (c.analysis.single_emitter_cps <= 0) bad("analysis.single_emitter_cps must be positive");
}

} // namespace

const std::vector<std::string>& config_key_registry() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> v;
        for (const auto& [section, names] : section_layout())
            for (const auto& n : names) v.push_back(section + "." + n);
        return v;
    }();
    return keys;
}

ParseReport parse_config(const std::string& text, const std::string& source_name) {
    ParseReport report;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(source_name, lineno, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            bool known = false;
            for (const auto& [name, keys] : section_layout())
                if (name == section) known = true;
            if (!known) fail(source_name, lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail(source_name, lineno, "expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) fail(source_name, lineno, "empty key");
        if (section.empty()) fail(source_name, lineno, "key '" + key + "' outside any section");
        const std::string path = section + "." + key;
        const auto it = bindings().find(path);
        if (it == bindings().end())
            fail(source_name, lineno, "unknown key '" + key + "' in section [" + section + "]");
        if (std::find(seen.begin(), seen.end(), path) != seen.end())
            fail(source_name, lineno, "duplicate key '" + key + "' in section [" + section + "]");
        it->second.set(report.config, value, source_name, lineno);
        seen.push_back(path);
    }
    report.provided_keys = seen;
    for (const auto& k : config_key_registry())
        if (std::find(seen.begin(), seen.end(), k) == seen.end())
            report.defaulted_keys.push_back(k);
    validate_semantics(report.config, source_name);
    return report;
}

ParseReport parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string serialize_config(const PipelineConfig& config) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, keys] : section_layout()) {
        if (!first) out << "\n";
        first = false;
        out << "[" << section << "]\n";
        for (const auto& k : keys) out << k << " = " << bindings().at(section + "." + k).get(config) << "\n";
    }
    return out.str();
}

} // namespace nvsim
