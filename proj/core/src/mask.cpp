#include "nvsim/mask.hpp"

#include "nvsim/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace nvsim {

void ApertureMask::validate() const {
    if (aperture_diameter_nm <= 0.0)
        throw std::invalid_argument("mask: nonpositive aperture diameter");
    if (aperture_diameter_nm >= pitch_nm)
        throw std::invalid_argument("mask: aperture diameter must be smaller than the pitch");
    if (resist_thickness_nm <= 0.0) throw std::invalid_argument("mask: nonpositive resist thickness");
    if (rows < 1 || cols < 1) throw std::invalid_argument("mask: grid extent must be >= 1x1");
}

EntryClass classify_entry(const ApertureMask& mask, double x_nm, double y_nm) {
    if (!std::isfinite(x_nm) || !std::isfinite(y_nm))
        throw std::invalid_argument("classify_entry: position not finite");
    const double fx = (x_nm - mask.origin_x_nm) / mask.pitch_nm;
    const double fy = (y_nm - mask.origin_y_nm) / mask.pitch_nm;
    const int col = static_cast<int>(std::lround(fx));
    const int row = static_cast<int>(std::lround(fy));
    if (col < 0 || col >= mask.cols || row < 0 || row >= mask.rows) return {};
    const ApertureIndex idx{row, col};
    const double dx = x_nm - mask.center_x_nm(idx);
    const double dy = y_nm - mask.center_y_nm(idx);
    const double r = 0.5 * mask.aperture_diameter_nm;
    if (dx * dx + dy * dy < r * r) return {true, idx};
    return {};
}

double expected_ions_per_aperture(const ApertureMask& mask, double fluence_per_cm2) {
    if (fluence_per_cm2 < 0.0) throw std::invalid_argument("expected_ions_per_aperture: negative fluence");
    const double radius_cm = 0.5 * mask.aperture_diameter_nm * 1e-7;
    return fluence_per_cm2 * constants::pi * radius_cm * radius_cm;
}

namespace {

void fill_aperture(const ApertureMask& mask, ApertureIndex idx, std::uint64_t count, Rng& rng,
                   std::vector<EntryPoint>& out) {
    const double r = 0.5 * mask.aperture_diameter_nm;
    for (std::uint64_t i = 0; i < count; ++i) {
        double dx = 0.0, dy = 0.0;
        rng.in_disc(r, dx, dy);
        out.push_back({idx, mask.center_x_nm(idx) + dx, mask.center_y_nm(idx) + dy});
    }
}

} // namespace

std::vector<EntryPoint> sample_entry_points(const ApertureMask& mask, double fluence_per_cm2,
                                            std::uint64_t seed) {
    mask.validate();
    const double mean = expected_ions_per_aperture(mask, fluence_per_cm2);
    std::vector<EntryPoint> out;
    out.reserve(static_cast<std::size_t>(mean * mask.aperture_count() * 1.2) + 16);
    for (int row = 0; row < mask.rows; ++row) {
        for (int col = 0; col < mask.cols; ++col) {
            const ApertureIndex idx{row, col};
            Rng rng(seed, "mask.entries", static_cast<std::uint64_t>(mask.flat_index(idx)));
            fill_aperture(mask, idx, rng.poisson(mean), rng, out);
        }
    }
    return out;
}

std::vector<EntryPoint> sample_entry_points_total(const ApertureMask& mask,
                                                  std::uint64_t total_ions, std::uint64_t seed) {
    mask.validate();
    // multinomial split via sequential binomial-free inversion: draw aperture
    // id per ion from the uniform categorical, then sort counts. Uniform over
    // apertures because every open disc has equal area.
    const int n_ap = mask.aperture_count();
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_ap), 0);
    Rng split_rng(seed, "mask.split", 0);
    for (std::uint64_t i = 0; i < total_ions; ++i) {
        const auto id = static_cast<std::size_t>(split_rng.uniform() * n_ap);
        ++counts[id < counts.size() ? id : counts.size() - 1];
    }
    std::vector<EntryPoint> out;
    out.reserve(total_ions);
    for (int row = 0; row < mask.rows; ++row) {
        for (int col = 0; col < mask.cols; ++col) {
            const ApertureIndex idx{row, col};
            Rng rng(seed, "mask.entries", static_cast<std::uint64_t>(mask.flat_index(idx)));
            fill_aperture(mask, idx, counts[static_cast<std::size_t>(mask.flat_index(idx))], rng,
                          out);
        }
    }
    return out;
}

} // namespace nvsim
