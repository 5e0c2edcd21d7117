#include "hbnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace hbnet::optim {

OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& start, const NelderMeadOptions& options) {
    const auto n = static_cast<int>(start.size());
    OptimResult result;
    if (n == 0) {
        result.x = start;
        result.value = f(start);
        result.evaluations = 1;
        result.converged = true;
        return result;
    }

    const double dn = n;
    const double alpha = 1.0;
    const double gamma = 1.0 + 2.0 / dn;
    const double rho = 0.75 - 1.0 / (2.0 * dn);
    const double sigma = 1.0 - 1.0 / dn;

    std::vector<Eigen::VectorXd> pts(n + 1, start);
    std::vector<double> fv(n + 1);
    auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    fv[0] = eval(pts[0]);
    for (int i = 0; i < n; ++i) {
        pts[i + 1](i) += options.initial_step;
        fv[i + 1] = eval(pts[i + 1]);
    }

    std::vector<int> order(n + 1);
    for (int it = 0;; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second = order[n - 1];

        if (fv[worst] - fv[best] <= options.ftol) {
            result.converged = true;
            result.iterations = it;
            break;
        }
        if (it >= options.max_iter) {
            result.iterations = it;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n + 1; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= dn;

        Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                pts[worst] = std::move(xr);
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            pts[worst] = std::move(xr);
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + rho * (xr - centroid))
                                     : Eigen::VectorXd(centroid + rho * (pts[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            pts[worst] = std::move(xc);
            fv[worst] = fc;
            continue;
        }
        for (int i = 0; i < n + 1; ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
            fv[i] = eval(pts[i]);
        }
    }

    const int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    result.x = pts[best];
    result.value = fv[best];
    return result;
}

OptimResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                           double tol, int max_iter) {
    constexpr double golden = 0.3819660112501051;
    double a = lo, b = hi;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = f(x);
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    OptimResult result;
    result.evaluations = 1;
    int it = 0;
    for (; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
            result.converged = true;
            break;
        }
        bool golden_step = true;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
                golden_step = false;
            }
        }
        if (golden_step) {
            e = (x < m ? b : a) - x;
            d = golden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        ++result.evaluations;
        if (fu <= fx) {
            (u < x ? b : a) = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            (u < x ? a : b) = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }
    result.iterations = it;
    result.x = Eigen::VectorXd::Constant(1, x);
    result.value = fx;
    return result;
}

}  // namespace hbnet::optim
