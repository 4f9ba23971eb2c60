// closed_form.cpp - analytic oracles for pure models at gamma = p/(p+q)
#include "bsg/closed_form.hpp"

#include <cmath>
#include <string>

namespace bsg::closed_form {

double omega(double x) {
    const double y = std::abs(x);
    // the branches agree at y = 2; log1p keeps the correction accurate just above
    if (y <= 2.0) return 0.25 * x * x - 0.5;
    const double s = std::sqrt((y - 2.0) * (y + 2.0));
    const double correction = 0.25 * y * s - std::log1p(0.5 * (y - 2.0 + s));
    return 0.25 * x * x - 0.5 - correction;
}

void check_pure_sum(int s, bool allow_any) {
    if (allow_any) {
        if (s < 2) throw std::invalid_argument("p+q must be at least 2");
        return;
    }
    if (s < 4)
        throw std::invalid_argument("p+q = " + std::to_string(s) +
                                    " is below 4, the smallest covered pure model; "
                                    "use the override to evaluate the bare formulas");
}

double sigma_pq(double t, int s, bool allow_any) {
    check_pure_sum(s, allow_any);
    const double logs1 = std::log(static_cast<double>(s - 1));
    if (t >= 0.0) return 0.5 * logs1;
    const double x = t * std::sqrt(static_cast<double>(s) / (s - 1));
    return 0.5 * (1.0 + logs1) + omega(x) - 0.5 * t * t;
}

double e_inf_closed(int s, bool allow_any) {
    check_pure_sum(s, allow_any);
    return 2.0 * std::sqrt(static_cast<double>(s - 1) / s);
}

double sigma_pq_min(double t, int s, bool allow_any) {
    check_pure_sum(s, allow_any);
    const double junction = -e_inf_closed(s, allow_any);
    return sigma_pq(std::min(t, junction), s, allow_any);
}

double e0_closed(int s, bool allow_any) {
    check_pure_sum(s, allow_any);
    double hi = 0.0;  // sigma_pq(0) = log(s-1)/2 > 0
    double lo = -1.0;
    while (sigma_pq(lo, s, allow_any) > 0.0) lo *= 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (sigma_pq(mid, s, allow_any) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace bsg::closed_form
