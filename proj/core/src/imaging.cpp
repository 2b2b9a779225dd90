#include "nvsim/imaging.hpp"

#include "nvsim/constants.hpp"
#include "nvsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvsim {

ScanExtent mask_extent(const ApertureMask& mask, double margin_nm) {
    ApertureIndex first{0, 0};
    ApertureIndex last{mask.rows - 1, mask.cols - 1};
    ScanExtent e;
    e.x0_nm = mask.center_x_nm(first) - margin_nm;
    e.y0_nm = mask.center_y_nm(first) - margin_nm;
    e.x1_nm = mask.center_x_nm(last) + margin_nm;
    e.y1_nm = mask.center_y_nm(last) + margin_nm;
    return e;
}

ScanImage render_scan(const std::vector<SpotPopulation>& populations, const ImagingConfig& config,
                      const ScanExtent& extent, std::uint64_t seed) {
    if (config.psf_sigma_nm <= 0) throw std::invalid_argument("render_scan: psf_sigma <= 0");
    if (config.pixel_size_nm <= 0) throw std::invalid_argument("render_scan: pixel_size <= 0");
    if (config.background_cps < 0) throw std::invalid_argument("render_scan: negative background");
    if (extent.x1_nm < extent.x0_nm || extent.y1_nm < extent.y0_nm)
        throw std::invalid_argument("render_scan: empty extent");

    ScanImage img;
    img.pixel_size_nm = config.pixel_size_nm;
    img.origin_x_nm = extent.x0_nm;
    img.origin_y_nm = extent.y0_nm;
    img.width = static_cast<int>(std::floor((extent.x1_nm - extent.x0_nm) / config.pixel_size_nm)) + 1;
    img.height = static_cast<int>(std::floor((extent.y1_nm - extent.y0_nm) / config.pixel_size_nm)) + 1;
    img.background_cps = config.background_cps;
    img.psf_sigma_nm = config.psf_sigma_nm;
    img.rate_cps.assign(static_cast<std::size_t>(img.width) * img.height, config.background_cps);

    const double sigma = config.psf_sigma_nm;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    // 5 sigma holds all but 4e-6 of the Gaussian volume, well inside the 1%
    // flux-conservation contract
    const double reach = 5.0 * sigma;
    for (const auto& pop : populations) {
        for (const auto& em : pop.emitters) {
            const int ix0 = std::max(0, static_cast<int>(std::ceil((em.x_nm - reach - img.origin_x_nm) / img.pixel_size_nm)));
            const int ix1 = std::min(img.width - 1, static_cast<int>(std::floor((em.x_nm + reach - img.origin_x_nm) / img.pixel_size_nm)));
            const int iy0 = std::max(0, static_cast<int>(std::ceil((em.y_nm - reach - img.origin_y_nm) / img.pixel_size_nm)));
            const int iy1 = std::min(img.height - 1, static_cast<int>(std::floor((em.y_nm + reach - img.origin_y_nm) / img.pixel_size_nm)));
            for (int iy = iy0; iy <= iy1; ++iy) {
                const double dy = img.pixel_y_nm(iy) - em.y_nm;
                for (int ix = ix0; ix <= ix1; ++ix) {
                    const double dx = img.pixel_x_nm(ix) - em.x_nm;
                    img.rate_cps[static_cast<std::size_t>(iy) * img.width + ix] +=
                        em.brightness_cps * std::exp(-(dx * dx + dy * dy) * inv2s2);
                }
            }
        }
    }

    if (config.dwell_noise) {
        if (config.dwell_time_s <= 0) throw std::invalid_argument("render_scan: dwell_time <= 0");
        Rng rng(seed, "scan", 0);
        for (auto& r : img.rate_cps) {
            const auto counts = rng.poisson(r * config.dwell_time_s);
            r = static_cast<double>(counts) / config.dwell_time_s;
        }
    }
    return img;
}

std::vector<DetectedSpot> detect_spots(const ScanImage& image, double threshold) {
    if (threshold <= 1.0) throw std::invalid_argument("detect_spots: threshold must exceed 1");
    std::vector<DetectedSpot> spots;
    if (image.width < 1 || image.height < 1) return spots;
    const double bg = image.background_cps;
    const double level = threshold * bg;
    const int w = image.width, h = image.height;

    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            const double v = image.at(ix, iy);
            if (v <= level) continue;
            // strictly above earlier neighbors, at least as high as later
            // ones: exactly one pixel of a flat plateau survives
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = ix + dx, ny = iy + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const double q = image.at(nx, ny);
                    const bool earlier = (dy < 0) || (dy == 0 && dx < 0);
                    if (earlier ? (q >= v) : (q > v)) is_max = false;
                }
            }
            if (!is_max) continue;

            DetectedSpot s;
            double wsum = 0, xsum = 0, ysum = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = ix + dx, ny = iy + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const double q = std::max(image.at(nx, ny) - bg, 0.0);
                    wsum += q;
                    xsum += q * image.pixel_x_nm(nx);
                    ysum += q * image.pixel_y_nm(ny);
                }
            }
            s.x_nm = wsum > 0 ? xsum / wsum : image.pixel_x_nm(ix);
            s.y_nm = wsum > 0 ? ysum / wsum : image.pixel_y_nm(iy);
            s.peak_cps = v - bg;
            if (image.psf_sigma_nm > 0) {
                const int reach = static_cast<int>(std::ceil(3.5 * image.psf_sigma_nm / image.pixel_size_nm));
                double total = 0;
                for (int ny = std::max(0, iy - reach); ny <= std::min(h - 1, iy + reach); ++ny)
                    for (int nx = std::max(0, ix - reach); nx <= std::min(w - 1, ix + reach); ++nx)
                        total += image.at(nx, ny) - bg;
                const double psf_volume = 2.0 * constants::pi * image.psf_sigma_nm * image.psf_sigma_nm /
                                          (image.pixel_size_nm * image.pixel_size_nm);
                s.flux_cps = total / psf_volume;
            }
            spots.push_back(s);
        }
    }
    std::sort(spots.begin(), spots.end(), [](const DetectedSpot& a, const DetectedSpot& b) {
        return a.y_nm != b.y_nm ? a.y_nm < b.y_nm : a.x_nm < b.x_nm;
    });
    return spots;
}

namespace {

// cluster sorted 1d positions with a break threshold, return cluster means
std::vector<double> cluster_means(std::vector<double> xs, double break_gap) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> means;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= xs.size(); ++i) {
        if (i == xs.size() || xs[i] - xs[i - 1] > break_gap) {
            double sum = 0;
            for (std::size_t j = start; j < i; ++j) sum += xs[j];
            means.push_back(sum / static_cast<double>(i - start));
            start = i;
        }
    }
    return means;
}

void gap_samples(const std::vector<double>& centers, double guess, std::vector<double>& out) {
    for (std::size_t i = 1; i < centers.size(); ++i) {
        const double gap = centers[i] - centers[i - 1];
        const double steps = std::max(1.0, std::round(gap / guess));
        const double sample = gap / steps;
        if (std::fabs(sample - guess) < 0.3 * guess) out.push_back(sample);
    }
}

} // namespace

double estimate_pitch(const std::vector<DetectedSpot>& spots) {
    if (spots.size() < 2) throw std::invalid_argument("estimate_pitch: need at least 2 spots");
    // nearest-neighbor median sets the initial scale
    std::vector<double> nn;
    nn.reserve(spots.size());
    for (std::size_t i = 0; i < spots.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < spots.size(); ++j) {
            if (i == j) continue;
            const double dx = spots[i].x_nm - spots[j].x_nm;
            const double dy = spots[i].y_nm - spots[j].y_nm;
            best = std::min(best, std::hypot(dx, dy));
        }
        nn.push_back(best);
    }
    std::sort(nn.begin(), nn.end());
    const double guess = nn[nn.size() / 2];

    std::vector<double> xs, ys;
    for (const auto& s : spots) {
        xs.push_back(s.x_nm);
        ys.push_back(s.y_nm);
    }
    std::vector<double> samples;
    gap_samples(cluster_means(std::move(xs), guess / 2.0), guess, samples);
    gap_samples(cluster_means(std::move(ys), guess / 2.0), guess, samples);
    if (samples.empty()) throw std::invalid_argument("estimate_pitch: no usable lattice gaps");
    double sum = 0;
    for (double s : samples) sum += s;
    return sum / static_cast<double>(samples.size());
}

double empty_fraction(const std::vector<DetectedSpot>& spots, const ApertureMask& mask,
                      double match_radius_nm) {
    mask.validate();
    if (match_radius_nm <= 0) throw std::invalid_argument("empty_fraction: radius <= 0");
    int empty = 0;
    const double r2 = match_radius_nm * match_radius_nm;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            const ApertureIndex idx{r, c};
            const double cx = mask.center_x_nm(idx), cy = mask.center_y_nm(idx);
            bool hit = false;
            for (const auto& s : spots) {
                const double dx = s.x_nm - cx, dy = s.y_nm - cy;
                if (dx * dx + dy * dy <= r2) {
                    hit = true;
                    break;
                }
            }
            if (!hit) ++empty;
        }
    }
    return static_cast<double>(empty) / (static_cast<double>(mask.rows) * mask.cols);
}

} // namespace nvsim
