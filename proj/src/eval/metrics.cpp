#include <algorithm>
#include <cmath>

#include "hbnet/error.hpp"
#include "hbnet/eval.hpp"

namespace hbnet::eval {

double mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw ModelError("mape: length mismatch");
    if (actual.empty()) throw ModelError("mape: no observations");
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) < 1e-8) throw ModelError("mape: actual value near zero at index " + std::to_string(i));
        total += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
    }
    return total / static_cast<double>(actual.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ModelError("pearson: length mismatch");
    if (a.size() < 2) throw ModelError("pearson: need at least 2 pairs");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0 && sbb > 0.0)) throw ModelError("pearson: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

DmResult dm_test(std::span<const double> errors_a, std::span<const double> errors_b, Loss loss) {
    if (errors_a.size() != errors_b.size()) throw ModelError("dm_test: length mismatch");
    const std::size_t n = errors_a.size();
    if (n < 10) throw ModelError("dm_test: need at least 10 paired errors");
    auto L = [loss](double e) { return loss == Loss::absolute ? std::abs(e) : e * e; };
    std::vector<double> d(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = L(errors_a[i]) - L(errors_b[i]);
        mean += d[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (mean == 0.0 && var == 0.0) return {0.0, 1.0};
    if (!(var > 0.0)) throw ModelError("dm_test: loss differential has zero variance");
    DmResult r;
    r.statistic = mean / std::sqrt(var / static_cast<double>(n));
    r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
    return r;
}

}  // namespace hbnet::eval
