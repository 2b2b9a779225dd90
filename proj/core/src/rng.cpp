#include "nvsim/rng.hpp"

namespace nvsim {

namespace {

// log(k!) for the PTRS acceptance test; exact table below 10, Stirling above
double log_factorial(double k) {
    static const double table[10] = {0.0,
                                     0.0,
                                     0.6931471805599453,
                                     1.791759469228055,
                                     3.1780538303479458,
                                     4.787491742782046,
                                     6.579251212010101,
                                     8.525161361065415,
                                     10.60460290274525,
                                     12.801827480081469};
    if (k < 10.0) return table[static_cast<int>(k)];
    const double k1 = k + 1.0;
    return std::lgamma(k1);
}

} // namespace

std::uint64_t Rng::poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
        // Knuth: count exponential arrivals until the product drops below e^-lambda
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double prod = uniform_pos();
        while (prod > limit) {
            ++k;
            prod *= uniform_pos();
        }
        return k;
    }
    // Hormann PTRS (transformed rejection with squeeze), W. Hormann 1993.
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform() - 0.5;
        const double v = uniform_pos();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            kf * loglam - lambda - log_factorial(kf)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

double Rng::gamma(double shape, double scale) {
    if (shape < 1.0) {
        // boost: Gamma(a) = Gamma(a+1) * U^(1/a)
        const double u = uniform_pos();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_pos();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

} // namespace nvsim
