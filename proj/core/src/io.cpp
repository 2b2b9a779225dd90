#include "nvsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace nvsim::io {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
    throw IoError(path + ":" + std::to_string(line) + ": " + msg);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw IoError(path + ": cannot open for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open (missing input?)");
    return in;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double to_double(const std::string& s, const std::string& path, int line) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(path, line, "malformed number '" + s + "'");
    return v;
}

long to_long(const std::string& s, const std::string& path, int line) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(path, line, "malformed integer '" + s + "'");
    return v;
}

void expect_header(const std::string& got, const std::string& want, const std::string& path) {
    if (got != want) fail(path, 1, "unexpected header '" + got + "', want '" + want + "'");
}

std::string species_symbol(const Element& e) {
    switch (e.atomic_number) {
    case 1: return "H";
    case 6: return "C";
    case 7: return "N";
    case 8: return "O";
    default: return "Z" + std::to_string(e.atomic_number);
    }
}

Element species_from_symbol(const std::string& s, const std::string& path, int line) {
    if (s == "N") return elements::nitrogen14;
    if (s == "C") return elements::carbon12;
    fail(path, line, "unknown species '" + s + "'");
}

void row_col(int flat, const ApertureMask& mask, int& row, int& col) {
    if (flat < 0) {
        row = -1;
        col = -1;
    } else {
        row = flat / mask.cols;
        col = flat % mask.cols;
    }
}

int flat_from(long row, long col, const ApertureMask& mask, const std::string& path, int line) {
    if (row < 0 || col < 0) return -1;
    if (row >= mask.rows || col >= mask.cols) fail(path, line, "aperture index out of range");
    return static_cast<int>(row) * mask.cols + static_cast<int>(col);
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_implant_csv(const std::string& path, const std::vector<RestPosition>& rests,
                       const ApertureMask& mask) {
    auto out = open_out(path);
    out << "species,aperture_row,aperture_col,x_nm,y_nm,z_nm,in_resist\n";
    for (const auto& r : rests) {
        int row, col;
        row_col(r.aperture, mask, row, col);
        out << species_symbol(r.species) << ',' << row << ',' << col << ','
            << format_double(r.x_nm) << ',' << format_double(r.y_nm) << ','
            << format_double(r.z_nm) << ',' << (r.in_resist ? 1 : 0) << '\n';
    }
}

std::vector<RestPosition> read_implant_csv(const std::string& path, const ApertureMask& mask) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, "empty file");
    expect_header(line, "species,aperture_row,aperture_col,x_nm,y_nm,z_nm,in_resist", path);
    std::vector<RestPosition> rests;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) fail(path, lineno, "expected 7 fields");
        RestPosition r;
        r.species = species_from_symbol(f[0], path, lineno);
        r.aperture = flat_from(to_long(f[1], path, lineno), to_long(f[2], path, lineno), mask, path, lineno);
        r.x_nm = to_double(f[3], path, lineno);
        r.y_nm = to_double(f[4], path, lineno);
        r.z_nm = to_double(f[5], path, lineno);
        const long flag = to_long(f[6], path, lineno);
        if (flag != 0 && flag != 1) fail(path, lineno, "in_resist must be 0 or 1");
        r.in_resist = flag == 1;
        rests.push_back(r);
    }
    return rests;
}

void write_vacancies_csv(const std::string& path, const std::vector<VacancySite>& sites,
                         const ApertureMask& mask) {
    auto out = open_out(path);
    out << "aperture_row,aperture_col,x_nm,y_nm,z_nm\n";
    for (const auto& v : sites) {
        int row, col;
        row_col(v.aperture, mask, row, col);
        out << row << ',' << col << ',' << format_double(v.x_nm) << ','
            << format_double(v.y_nm) << ',' << format_double(v.z_nm) << '\n';
    }
}

std::vector<VacancySite> read_vacancies_csv(const std::string& path, const ApertureMask& mask) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, "empty file");
    expect_header(line, "aperture_row,aperture_col,x_nm,y_nm,z_nm", path);
    std::vector<VacancySite> sites;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 5) fail(path, lineno, "expected 5 fields");
        VacancySite v;
        v.aperture = flat_from(to_long(f[0], path, lineno), to_long(f[1], path, lineno), mask, path, lineno);
        v.x_nm = to_double(f[2], path, lineno);
        v.y_nm = to_double(f[3], path, lineno);
        v.z_nm = to_double(f[4], path, lineno);
        sites.push_back(v);
    }
    return sites;
}

void write_spots_csv(const std::string& path, const std::vector<SpotPopulation>& populations,
                     const ApertureMask& mask) {
    auto out = open_out(path);
    out << "aperture_row,aperture_col,x_nm,y_nm,z_nm,charge,brightness_cps\n";
    for (const auto& pop : populations) {
        for (const auto& em : pop.emitters) {
            int row, col;
            row_col(pop.aperture, mask, row, col);
            out << row << ',' << col << ',' << format_double(em.x_nm) << ','
                << format_double(em.y_nm) << ',' << format_double(em.z_nm) << ','
                << (em.charge == ChargeState::nv_minus ? "minus" : "neutral") << ','
                << format_double(em.brightness_cps) << '\n';
        }
    }
}

std::vector<SpotPopulation> read_spots_csv(const std::string& path, const ApertureMask& mask) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, "empty file");
    expect_header(line, "aperture_row,aperture_col,x_nm,y_nm,z_nm,charge,brightness_cps", path);
    std::vector<SpotPopulation> populations(static_cast<std::size_t>(mask.rows) * mask.cols);
    for (std::size_t i = 0; i < populations.size(); ++i)
        populations[i].aperture = static_cast<int>(i);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) fail(path, lineno, "expected 7 fields");
        const int flat = flat_from(to_long(f[0], path, lineno), to_long(f[1], path, lineno), mask, path, lineno);
        if (flat < 0) fail(path, lineno, "emitter outside any aperture");
        Emitter em;
        em.x_nm = to_double(f[2], path, lineno);
        em.y_nm = to_double(f[3], path, lineno);
        em.z_nm = to_double(f[4], path, lineno);
        if (f[5] == "minus") em.charge = ChargeState::nv_minus;
        else if (f[5] == "neutral") em.charge = ChargeState::nv_neutral;
        else fail(path, lineno, "charge must be minus or neutral");
        em.brightness_cps = to_double(f[6], path, lineno);
        populations[static_cast<std::size_t>(flat)].emitters.push_back(em);
    }
    return populations;
}

void write_scan_csv(const std::string& path, const ScanImage& image) {
    auto out = open_out(path);
    for (int iy = 0; iy < image.height; ++iy) {
        for (int ix = 0; ix < image.width; ++ix) {
            if (ix) out << ',';
            out << format_double(image.at(ix, iy));
        }
        out << '\n';
    }
}

void write_scan_pgm(const std::string& path, const ScanImage& image) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    double max = 0;
    for (double v : image.rate_cps) max = std::max(max, v);
    out << "P5\n" << image.width << " " << image.height << "\n65535\n";
    for (double v : image.rate_cps) {
        const double scaled = max > 0 ? v / max * 65535.0 : 0.0;
        const auto g = static_cast<std::uint16_t>(std::lround(std::clamp(scaled, 0.0, 65535.0)));
        out.put(static_cast<char>(g >> 8));
        out.put(static_cast<char>(g & 0xff));
    }
}

void write_detections_csv(const std::string& path, const std::vector<DetectedSpot>& spots) {
    auto out = open_out(path);
    out << "x_nm,y_nm,peak_cps,flux_cps\n";
    for (const auto& s : spots)
        out << format_double(s.x_nm) << ',' << format_double(s.y_nm) << ','
            << format_double(s.peak_cps) << ',' << format_double(s.flux_cps) << '\n';
}

std::vector<DetectedSpot> read_detections_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, "empty file");
    expect_header(line, "x_nm,y_nm,peak_cps,flux_cps", path);
    std::vector<DetectedSpot> spots;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) fail(path, lineno, "expected 4 fields");
        DetectedSpot s;
        s.x_nm = to_double(f[0], path, lineno);
        s.y_nm = to_double(f[1], path, lineno);
        s.peak_cps = to_double(f[2], path, lineno);
        s.flux_cps = to_double(f[3], path, lineno);
        spots.push_back(s);
    }
    return spots;
}

void write_g2_csv(const std::string& path, const G2Record& record, const G2Curve& curve) {
    const auto& h = record.histogram;
    if (h.bin_edges_ns.size() != h.counts.size() + 1 || h.counts.size() != curve.value.size())
        throw IoError(path + ": inconsistent histogram/curve sizes");
    auto out = open_out(path);
    out << "# aperture_row = " << record.row << "\n";
    out << "# aperture_col = " << record.col << "\n";
    out << "# normalization = " << format_double(h.normalization) << "\n";
    out << "# rho = " << format_double(h.rho) << "\n";
    out << "# signal_cps = " << format_double(record.signal_cps) << "\n";
    out << "# background_cps = " << format_double(record.background_cps) << "\n";
    out << "# duration_ns = " << format_double(record.duration_ns) << "\n";
    out << "# bin_width_ns = " << format_double(h.bin_edges_ns[1] - h.bin_edges_ns[0]) << "\n";
    out << "# fit_g2_zero = " << format_double(curve.fit.g2_zero) << "\n";
    out << "# fit_g2_zero_err = " << format_double(curve.fit.g2_zero_err) << "\n";
    out << "# fit_timescale_ns = " << format_double(curve.fit.timescale_ns) << "\n";
    out << "tau_ns,counts,corrected,error\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << format_double(curve.tau_ns[i]) << ',' << h.counts[i] << ','
            << format_double(curve.value[i]) << ',' << format_double(curve.error[i]) << '\n';
}

G2Record read_g2_csv(const std::string& path) {
    auto in = open_in(path);
    G2Record rec;
    double bin_width = 0;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::vector<double> centers;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key, eq, value;
            ss >> key >> eq >> value;
            if (eq != "=") fail(path, lineno, "malformed metadata comment");
            if (key == "aperture_row") rec.row = static_cast<int>(to_long(value, path, lineno));
            else if (key == "aperture_col") rec.col = static_cast<int>(to_long(value, path, lineno));
            else if (key == "normalization") rec.histogram.normalization = to_double(value, path, lineno);
            else if (key == "rho") rec.histogram.rho = to_double(value, path, lineno);
            else if (key == "signal_cps") rec.signal_cps = to_double(value, path, lineno);
            else if (key == "background_cps") rec.background_cps = to_double(value, path, lineno);
            else if (key == "duration_ns") rec.duration_ns = to_double(value, path, lineno);
            else if (key == "bin_width_ns") bin_width = to_double(value, path, lineno);
            // fit lines are informational; the curve is refit on load
            continue;
        }
        if (!header_seen) {
            expect_header(line, "tau_ns,counts,corrected,error", path);
            header_seen = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 4) fail(path, lineno, "expected 4 fields");
        centers.push_back(to_double(f[0], path, lineno));
        rec.histogram.counts.push_back(to_long(f[1], path, lineno));
    }
    if (!header_seen || centers.empty()) fail(path, lineno, "no histogram rows");
    if (!(bin_width > 0)) fail(path, lineno, "missing bin_width_ns metadata");
    rec.histogram.bin_edges_ns.reserve(centers.size() + 1);
    for (double c : centers) rec.histogram.bin_edges_ns.push_back(c - 0.5 * bin_width);
    rec.histogram.bin_edges_ns.push_back(centers.back() + 0.5 * bin_width);
    return rec;
}

void write_timestamps_csv(const std::string& path, const PhotonEventStream& stream) {
    auto out = open_out(path);
    out << "# duration_ns = " << format_double(stream.duration_ns) << "\n";
    out << "# signal_rate_cps = " << format_double(stream.signal_rate_cps) << "\n";
    out << "# background_rate_cps = " << format_double(stream.background_rate_cps) << "\n";
    out << "time_ns,detector\n";
    std::size_t ia = 0, ib = 0;
    while (ia < stream.detector_a_ns.size() || ib < stream.detector_b_ns.size()) {
        const bool take_a = ib >= stream.detector_b_ns.size() ||
                            (ia < stream.detector_a_ns.size() &&
                             stream.detector_a_ns[ia] <= stream.detector_b_ns[ib]);
        if (take_a) {
            out << format_double(stream.detector_a_ns[ia++]) << ",0\n";
        } else {
            out << format_double(stream.detector_b_ns[ib++]) << ",1\n";
        }
    }
}

PhotonEventStream read_timestamps_csv(const std::string& path) {
    auto in = open_in(path);
    PhotonEventStream stream;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    double last = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key, eq, value;
            ss >> key >> eq >> value;
            if (eq != "=") fail(path, lineno, "malformed metadata comment");
            if (key == "duration_ns") stream.duration_ns = to_double(value, path, lineno);
            else if (key == "signal_rate_cps") stream.signal_rate_cps = to_double(value, path, lineno);
            else if (key == "background_rate_cps") stream.background_rate_cps = to_double(value, path, lineno);
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            // our own files carry a header; bare two-column exports do not
            if (line == "time_ns,detector") continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 2) fail(path, lineno, "expected 2 fields");
        const double t = to_double(f[0], path, lineno);
        if (t < last) fail(path, lineno, "timestamps must be nondecreasing");
        last = t;
        const long d = to_long(f[1], path, lineno);
        if (d == 0) stream.detector_a_ns.push_back(t);
        else if (d == 1) stream.detector_b_ns.push_back(t);
        else fail(path, lineno, "detector must be 0 or 1");
    }
    if (stream.duration_ns <= 0 && last > 0) stream.duration_ns = last;
    return stream;
}

} // namespace nvsim::io
