#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hbnet/error.hpp"
#include "hbnet/infer.hpp"

namespace hbnet::infer {

KdeResult kde_interval(const WeightedSample& sample, double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0)) throw ModelError("kde_interval: coverage must lie in (0, 1)");
    if (!(sample.ess >= 10.0)) throw ModelError("kde_interval: effective sample size below 10");
    const auto& v = sample.values;
    const auto& w = sample.weights;

    KdeResult r;
    const double tail = 0.5 * (1.0 - coverage);
    r.lo = weighted_quantile(v, w, tail);
    r.hi = weighted_quantile(v, w, 1.0 - tail);

    double sw = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sw += w[i];
        mean += w[i] * v[i];
    }
    mean /= sw;
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) var += w[i] * (v[i] - mean) * (v[i] - mean);
    const double sd = std::sqrt(var / sw);
    const double iqr = weighted_quantile(v, w, 0.75) - weighted_quantile(v, w, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    r.bandwidth = 0.9 * spread * std::pow(sample.ess, -0.2);
    if (!(r.bandwidth > 0.0)) {
        r.bandwidth = 0.0;
        return r;
    }

    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (w[i] > 0.0) {
            vmin = std::min(vmin, v[i]);
            vmax = std::max(vmax, v[i]);
        }
    const double a = vmin - 3.0 * r.bandwidth, b = vmax + 3.0 * r.bandwidth;
    constexpr std::size_t kGrid = 512;
    r.grid.resize(kGrid);
    r.density.assign(kGrid, 0.0);
    for (std::size_t k = 0; k < kGrid; ++k) r.grid[k] = a + (b - a) * static_cast<double>(k) / (kGrid - 1);
    const double norm = 1.0 / (sw * r.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (w[i] <= 0.0) continue;
        for (std::size_t k = 0; k < kGrid; ++k) {
            const double z = (r.grid[k] - v[i]) / r.bandwidth;
            if (std::abs(z) < 8.0) r.density[k] += w[i] * std::exp(-0.5 * z * z);
        }
    }
    for (auto& d : r.density) d *= norm;
    return r;
}

}  // namespace hbnet::infer
