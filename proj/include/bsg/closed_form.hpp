// closed_form.hpp - analytic complexity curves for pure models at gamma = p/(p+q)
#pragma once

#include <stdexcept>

namespace bsg::closed_form {

// Log-potential of the standard semicircle (radius 2): two-branch formula,
// continuous and differentiable at |x| = 2, even in x.
double omega(double x);

// s = p+q of a pure model; the formulas require s >= 4 (p, q >= 2) but are
// well-defined expressions for any s >= 2, reachable with allow_any.
void check_pure_sum(int s, bool allow_any = false);

// Total complexity below level t:
//   (1+log(s-1))/2 + omega(t sqrt(s/(s-1))) - t^2/2   for t <= 0,
//   log(s-1)/2                                        for t >= 0.
double sigma_pq(double t, int s, bool allow_any = false);

// Minima complexity below level t: equals sigma_pq up to -E_infty, constant after.
double sigma_pq_min(double t, int s, bool allow_any = false);

// E_infty(p, q, p/(p+q)) = 2 sqrt((s-1)/s).
double e_inf_closed(int s, bool allow_any = false);

// -E_0(s): the unique zero of sigma_pq(., s) on (-infty, 0), bisection to 1e-9.
double e0_closed(int s, bool allow_any = false);

}  // namespace bsg::closed_form
