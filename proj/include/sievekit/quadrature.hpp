#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sievekit {

struct QuadratureResult {
    double value = 0.0;
    /// Sum of the local |S2 - S1| / 15 estimates over accepted intervals.
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

template <class F>
void simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tolerance,
                  int depth, QuadratureResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    out.evaluations += 2;
    const double h = (b - a) / 12.0;
    const double left = h * (fa + 4.0 * flm + fm);
    const double right = h * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance || m <= a || b <= m) {
        out.value += left + right + delta / 15.0;
        out.error += std::abs(delta) / 15.0;
        return;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tolerance, depth - 1, out);
    simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tolerance, depth - 1, out);
}

}  // namespace detail

/// Adaptive Simpson on [a, b] with absolute tolerance `tolerance`.
template <class F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, double tolerance, int max_depth = 48) {
    QuadratureResult out;
    if (!(b > a)) {
        return out;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    out.evaluations = 3;
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::simpson_step(f, a, b, fa, fm, fb, whole, tolerance, max_depth, out);
    return out;
}

/// Integrates over [a, b] split at `cuts` (points outside the range are ignored); each panel
/// gets a share of the tolerance proportional to its length.
template <class F>
QuadratureResult integrate_panels(F&& f, double a, double b, std::vector<double> cuts, double tolerance) {
    QuadratureResult total;
    if (!(b > a)) {
        return total;
    }
    std::vector<double> points{a, b};
    for (double c : cuts) {
        if (c > a && c < b) {
            points.push_back(c);
        }
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)); }),
                 points.end());
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double lo = points[i];
        const double hi = points[i + 1];
        const QuadratureResult part = adaptive_simpson(f, lo, hi, tolerance * (hi - lo) / (b - a));
        total.value += part.value;
        total.error += part.error;
        total.evaluations += part.evaluations;
    }
    return total;
}

/// Roots of g on [a, b]: sign changes found on a uniform scan of spacing about `resolution`,
/// each refined by bisection to width `precision`. Zero counts as non-positive.
template <class G>
std::vector<double> sign_changes(G&& g, double a, double b, double resolution = 1e-3, double precision = 1e-12) {
    std::vector<double> roots;
    if (!(b > a)) {
        return roots;
    }
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / resolution)));
    double x0 = a;
    bool s0 = g(a) > 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x1 = i == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
        const bool s1 = g(x1) > 0.0;
        if (s1 != s0) {
            double lo = x0;
            double hi = x1;
            while (hi - lo > precision) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    break;
                }
                if ((g(mid) > 0.0) == s0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x0 = x1;
        s0 = s1;
    }
    return roots;
}

}  // namespace sievekit
