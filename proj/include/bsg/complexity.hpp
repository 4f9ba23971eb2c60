// complexity.hpp - the variational problems for total / minima complexity
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsg/mde.hpp"
#include "bsg/model.hpp"

namespace bsg {

// Optimizer terminated on the search-box boundary; result untrustworthy.
struct BoundaryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ComplexityMode { Total, Minima };

struct OptimizerDiagnostics {
    long objective_evals = 0;
    int starts = 0;
    bool t_constraint_active = false;
    bool g_constraint_active = false;
    std::vector<FieldPoint> candidate_maximizers;
};

struct ComplexityResult {
    double value = 0.0;          // constant_part + functional_part
    FieldPoint maximizer;
    ComplexityMode mode = ComplexityMode::Total;
    std::optional<double> threshold_t;
    double constant_part = 0.0;
    double functional_part = 0.0;
    OptimizerDiagnostics diagnostics;
};

// Numerical knobs shared by the variational solvers. Defaults match the
// values reported in every CLI metadata block.
struct ComplexityOptions {
    int resolution = kDefaultResolution;
    double eta_min = kDefaultEtaMin;
    double search_radius = 10.0;    // box radius R
    double u_tol = 1e-7;            // golden-section interval tolerance
    int nelder_mead_starts = 8;
    double bisect_tol = 1e-6;
};

// Integral of log|lambda| against the density, with the log singularity at
// zero handled analytically when 0 lies inside the support.
double log_potential(const SpectralDensity& density);

// log_potential(mu_infty(u)) - |u|^2/2, evaluated through the MDE pipeline
// on a window fitted to the detected support.
double s_bsg(const ModelParams& params, const FieldPoint& u,
             const ComplexityOptions& opts = {});

// Membership in G: left edge of mu_infty(u) >= -tol.
bool in_g(const ModelParams& params, const FieldPoint& u, double tol = 1e-6);

// sup over the half-space u0 <= t (all of R^3 when t is absent) of s_bsg,
// plus the prefactor constant. 1-D golden section for pure models,
// multi-start Nelder-Mead for mixtures.
ComplexityResult sigma_total(const ModelParams& params, std::optional<double> t = std::nullopt,
                             const ComplexityOptions& opts = {});

// Same but restricted to G (minima).
ComplexityResult sigma_min(const ModelParams& params, std::optional<double> t = std::nullopt,
                           const ComplexityOptions& opts = {});

// The threshold E_infty > 0 of a pure model: -E_infty is the u0 at which the
// left edge of mu_infty((u0,0,0)) touches zero. Bisection to bisect_tol.
double e_infinity(const ModelParams& params, const ComplexityOptions& opts = {});

// -E_0: the unique zero of t -> sigma_total(t).value on (-infty, 0).
double ground_state_bound(const ModelParams& params, const ComplexityOptions& opts = {});

}  // namespace bsg
