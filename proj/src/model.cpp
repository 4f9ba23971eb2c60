// model.cpp - mixture parsing and derived scalar parameters
#include "bsg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace bsg {

bool MixtureSpec::is_pure() const {
    int nonzero = 0;
    for (const auto& t : entries)
        if (t.beta > 0.0) ++nonzero;
    return nonzero == 1;
}

double MixtureSpec::beta_square_sum() const {
    double s = 0.0;
    for (const auto& t : entries) s += t.beta * t.beta;
    return s;
}

void validate_mixture(const MixtureSpec& spec) {
    if (spec.entries.empty()) throw ModelError("mixture has no terms");
    std::map<std::pair<int, int>, int> seen;
    bool any_positive = false;
    for (const auto& t : spec.entries) {
        if (t.p < 1 || t.q < 1)
            throw ModelError("mixture exponents must satisfy p >= 1 and q >= 1, got (" +
                             std::to_string(t.p) + "," + std::to_string(t.q) + ")");
        if (t.beta < 0.0)
            throw ModelError("negative coefficient beta at term (" + std::to_string(t.p) + "," +
                             std::to_string(t.q) + ")");
        if (++seen[{t.p, t.q}] > 1)
            throw ModelError("duplicate term (" + std::to_string(t.p) + "," +
                             std::to_string(t.q) + ")");
        if (t.beta > 0.0) any_positive = true;
    }
    if (!any_positive) throw ModelError("all coefficients are zero");
    const double s = spec.beta_square_sum();
    if (std::abs(s - 1.0) > kNormalizationTol) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "mixture not normalized: sum beta^2 = %.17g (deviation %.3g); "
                      "pass --renormalize to rescale",
                      s, s - 1.0);
        throw ModelError(buf);
    }
}

MixtureSpec parse_mixture_lenient(std::string_view text) {
    MixtureSpec spec;
    // strip comments first, then allow ';' as a statement separator
    std::string normalized;
    {
        std::istringstream raw{std::string(text)};
        std::string line;
        while (std::getline(raw, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::replace(line.begin(), line.end(), ';', '\n');
            normalized += line;
            normalized += '\n';
        }
    }
    std::istringstream in{normalized};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string keyword;
        if (!(ls >> keyword)) continue;  // blank
        MixtureTerm term;
        auto fail = [&](const char* what) {
            throw ModelError("line " + std::to_string(lineno) + ": " + what + ": '" + line + "'");
        };
        if (keyword == "term") {
            if (!(ls >> term.p >> term.q >> term.beta)) fail("expected 'term <p> <q> <beta>'");
        } else if (keyword == "pure") {
            if (!(ls >> term.p >> term.q)) fail("expected 'pure <p> <q>'");
            term.beta = 1.0;
        } else {
            fail("unknown directive");
        }
        std::string trailing;
        if (ls >> trailing) fail("trailing tokens");
        spec.entries.push_back(term);
    }
    if (spec.entries.empty()) throw ModelError("mixture has no terms");
    std::map<std::pair<int, int>, int> seen;
    for (const auto& t : spec.entries) {
        if (t.p < 1 || t.q < 1) throw ModelError("mixture exponents must satisfy p, q >= 1");
        if (t.beta < 0.0) throw ModelError("negative coefficient beta");
        if (++seen[{t.p, t.q}] > 1)
            throw ModelError("duplicate term (" + std::to_string(t.p) + "," +
                             std::to_string(t.q) + ")");
    }
    return spec;
}

MixtureSpec parse_mixture(std::string_view text) {
    MixtureSpec spec = parse_mixture_lenient(text);
    validate_mixture(spec);
    return spec;
}

MixtureSpec renormalize(const MixtureSpec& spec) {
    const double s = spec.beta_square_sum();
    if (s <= 0.0) throw ModelError("cannot renormalize: sum beta^2 = 0");
    MixtureSpec out = spec;
    const double scale = 1.0 / std::sqrt(s);
    for (auto& t : out.entries) t.beta *= scale;
    return out;
}

std::string serialize_mixture(const MixtureSpec& spec) {
    std::string out;
    char buf[96];
    for (const auto& t : spec.entries) {
        std::snprintf(buf, sizeof(buf), "term %d %d %.17g\n", t.p, t.q, t.beta);
        out += buf;
    }
    return out;
}

ModelParams derive_params(const MixtureSpec& spec, double gamma) {
    validate_mixture(spec);
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ModelError("gamma must lie in (0,1), got " + std::to_string(gamma));
    ModelParams p;
    p.gamma = gamma;
    for (const auto& t : spec.entries) {
        const double b2 = t.beta * t.beta;
        p.xi1_prime += t.p * b2;
        p.xi2_prime += t.q * b2;
        p.xi1_dprime += static_cast<double>(t.p) * (t.p - 1) * b2;
        p.xi2_dprime += static_cast<double>(t.q) * (t.q - 1) * b2;
    }
    const double a1sq = p.xi1_dprime + p.xi1_prime - p.xi1_prime * p.xi1_prime;
    const double a2sq = p.xi2_dprime + p.xi2_prime - p.xi2_prime * p.xi2_prime;
    // Cauchy-Schwarz guarantees these are nonnegative for normalized mixtures.
    if (a1sq < -kNormalizationTol || a2sq < -kNormalizationTol)
        throw ModelError("internal: alpha_i^2 negative beyond tolerance");
    p.alpha1 = std::sqrt(std::max(a1sq, 0.0));
    p.alpha2 = std::sqrt(std::max(a2sq, 0.0));
    p.pure = spec.is_pure();
    if (!p.nondegenerate())
        throw ModelError(
            "unsupported model: xi_1'' and xi_2'' must both be positive "
            "(pure (1,q) and (p,1) models are excluded)");
    return p;
}

double prefactor_limit(const ModelParams& params) {
    const double g = params.gamma;
    return (1.0 + g * std::log(g / params.xi1_prime) +
            (1.0 - g) * std::log((1.0 - g) / params.xi2_prime)) /
           2.0;
}

}  // namespace bsg
