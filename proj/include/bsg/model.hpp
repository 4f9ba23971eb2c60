// model.hpp - mixture specification, derived scalar parameters
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bsg {

// Validation / parse failures (bad model file, degenerate model, bad gamma).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One term beta_{p,q} x^p y^q of the mixture polynomial xi.
struct MixtureTerm {
    int p = 1;
    int q = 1;
    double beta = 0.0;
};

// Finite coefficient table of xi(x,y) = sum beta_{p,q}^2 x^p y^q,
// normalized so that xi(1,1) = 1.
struct MixtureSpec {
    std::vector<MixtureTerm> entries;

    bool is_pure() const;
    double beta_square_sum() const;
};

// Loose enough to accept coefficients given to ~10 significant digits.
inline constexpr double kNormalizationTol = 1e-9;

// Parses the line-based model format:
//   term <p> <q> <beta>
//   pure <p> <q>
// '#' starts a comment, blank lines are skipped. Normalization is checked,
// not enforced; see renormalize().
MixtureSpec parse_mixture(std::string_view text);

// Same parse with syntax/duplicate/negative checks but without the
// normalization check; feed the result to renormalize().
MixtureSpec parse_mixture_lenient(std::string_view text);

// Divides all beta by sqrt(sum beta^2). Throws if the sum is zero.
MixtureSpec renormalize(const MixtureSpec& spec);

// Round-trippable text form, 17 significant digits.
std::string serialize_mixture(const MixtureSpec& spec);

// Throws ModelError on empty list, duplicate (p,q), negative beta,
// p or q < 1, or normalization off by more than kNormalizationTol.
void validate_mixture(const MixtureSpec& spec);

// gamma plus the derivative scalars of xi at (1,1). Immutable once built.
struct ModelParams {
    double gamma = 0.5;
    double xi1_prime = 0.0;
    double xi2_prime = 0.0;
    double xi1_dprime = 0.0;
    double xi2_dprime = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    bool pure = false;

    bool nondegenerate() const { return xi1_dprime > 0.0 && xi2_dprime > 0.0; }
};

// Computes all derived scalars. Throws ModelError if gamma is outside (0,1),
// the spec fails validation, or the model is degenerate (pure (1,q)/(p,1)).
ModelParams derive_params(const MixtureSpec& spec, double gamma);

// (1 + gamma log(gamma/xi1') + (1-gamma) log((1-gamma)/xi2'))/2,
// the constant part of every complexity value.
double prefactor_limit(const ModelParams& params);

}  // namespace bsg
