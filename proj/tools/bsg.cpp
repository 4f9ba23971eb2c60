// bsg.cpp - command line driver: complexity, curve, thresholds, density,
// closed-form, verify
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bsg/closed_form.hpp"
#include "bsg/complexity.hpp"
#include "bsg/mde.hpp"
#include "bsg/model.hpp"
#include "bsg/rmt.hpp"

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBoundary = 4;

struct GlobalConfig {
    std::string model_path;
    double gamma = 0.5;
    bool renormalize = false;
    int threads = 0;
    std::string output;
    std::string format = "json";
};

bsg::ModelParams load_model(const GlobalConfig& cfg, bsg::MixtureSpec* spec_out = nullptr) {
    std::ifstream in(cfg.model_path);
    if (!in) throw bsg::ModelError("cannot open model file: " + cfg.model_path);
    std::stringstream ss;
    ss << in.rdbuf();
    bsg::MixtureSpec spec;
    if (cfg.renormalize) {
        spec = bsg::renormalize(bsg::parse_mixture_lenient(ss.str()));
        bsg::validate_mixture(spec);
    } else {
        spec = bsg::parse_mixture(ss.str());
    }
    if (spec_out) *spec_out = spec;
    return bsg::derive_params(spec, cfg.gamma);
}

void apply_threads(const GlobalConfig& cfg) {
#ifdef _OPENMP
    int n = cfg.threads;
    if (n <= 0)
        if (const char* env = std::getenv("BSG_THREADS")) n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
#else
    (void)cfg;
#endif
}

void emit(const GlobalConfig& cfg, const std::string& payload) {
    if (cfg.output.empty()) {
        std::cout << payload;
        if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream out(cfg.output);
        if (!out) throw bsg::ModelError("cannot write output file: " + cfg.output);
        out << payload;
    }
}

json metadata_block(const bsg::ComplexityOptions& opts) {
    return {{"eta_min", opts.eta_min},
            {"resolution", opts.resolution},
            {"search_radius", opts.search_radius},
            {"u_tol", opts.u_tol},
            {"bisect_tol", opts.bisect_tol},
            {"mde_residual_tol", bsg::kMdeResidualTol}};
}

json field_json(const bsg::FieldPoint& u) { return {u.u0, u.u1, u.u2}; }

json result_json(const bsg::ComplexityResult& r, const bsg::ComplexityOptions& opts) {
    json j{{"schema_version", kSchemaVersion},
           {"value", r.value},
           {"constant_part", r.constant_part},
           {"functional_part", r.functional_part},
           {"mode", r.mode == bsg::ComplexityMode::Total ? "total" : "minima"},
           {"maximizer", field_json(r.maximizer)},
           {"diagnostics",
            {{"objective_evals", r.diagnostics.objective_evals},
             {"starts", r.diagnostics.starts},
             {"t_constraint_active", r.diagnostics.t_constraint_active},
             {"g_constraint_active", r.diagnostics.g_constraint_active}}},
           {"metadata", metadata_block(opts)}};
    if (r.threshold_t) j["threshold_t"] = *r.threshold_t;
    return j;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

int run_complexity(const GlobalConfig& cfg, const std::string& mode, std::optional<double> t,
                   const bsg::ComplexityOptions& opts) {
    const bsg::ModelParams params = load_model(cfg);
    const bsg::ComplexityResult r = mode == "minima" ? bsg::sigma_min(params, t, opts)
                                                     : bsg::sigma_total(params, t, opts);
    emit(cfg, result_json(r, opts).dump(2));
    return 0;
}

int run_curve(const GlobalConfig& cfg, double t_min, double t_max, double t_step,
              const bsg::ComplexityOptions& opts) {
    if (t_step <= 0.0) throw CLI::ValidationError("--t-step must be positive");
    if (t_max < t_min) throw CLI::ValidationError("--t-max must be >= --t-min");
    bsg::MixtureSpec spec;
    const bsg::ModelParams params = load_model(cfg, &spec);

    // closed-form columns only for pure models at gamma = p/(p+q)
    std::optional<int> closed_s;
    if (spec.is_pure()) {
        for (const auto& term : spec.entries)
            if (term.beta > 0.0) {
                const int s = term.p + term.q;
                if (s >= 4 && std::abs(cfg.gamma - static_cast<double>(term.p) / s) < 1e-12)
                    closed_s = s;
            }
    }

    std::ostringstream csv;
    csv << "t,sigma_total,sigma_min";
    if (closed_s) csv << ",closed_form_total,closed_form_min";
    csv << "\n";
    for (double t = t_min; t <= t_max + 1e-12; t += t_step) {
        const auto tot = bsg::sigma_total(params, t, opts);
        const auto min = bsg::sigma_min(params, t, opts);
        csv << format_double(t) << "," << format_double(tot.value) << ","
            << format_double(min.value);
        if (closed_s)
            csv << "," << format_double(bsg::closed_form::sigma_pq(t, *closed_s)) << ","
                << format_double(bsg::closed_form::sigma_pq_min(t, *closed_s));
        csv << "\n";
    }
    emit(cfg, csv.str());
    return 0;
}

int run_thresholds(const GlobalConfig& cfg, const bsg::ComplexityOptions& opts) {
    bsg::MixtureSpec spec;
    const bsg::ModelParams params = load_model(cfg, &spec);
    json j{{"schema_version", kSchemaVersion}, {"metadata", metadata_block(opts)}};
    if (params.pure) {
        j["e_infinity"] = bsg::e_infinity(params, opts);
        for (const auto& term : spec.entries)
            if (term.beta > 0.0) {
                const int s = term.p + term.q;
                if (s >= 4 && std::abs(cfg.gamma - static_cast<double>(term.p) / s) < 1e-12)
                    j["closed_form_e_infinity"] = bsg::closed_form::e_inf_closed(s);
            }
    } else {
        std::cerr << "warning: e_infinity is defined for pure models only; field omitted\n";
    }
    j["ground_state_bound"] = bsg::ground_state_bound(params, opts);
    emit(cfg, j.dump(2));
    return 0;
}

int run_density(const GlobalConfig& cfg, const bsg::FieldPoint& u, int resolution,
                std::optional<std::pair<double, double>> window, double eta_min) {
    if (cfg.output.empty())
        throw CLI::ValidationError("density requires --output (CSV plus JSON sidecar)");
    const bsg::ModelParams params = load_model(cfg);
    const bsg::SpectralDensity d =
        window ? bsg::density(params, u, *window, resolution, eta_min)
               : bsg::density_auto(params, u, resolution, eta_min);
    std::ostringstream csv;
    csv << "lambda,rho\n";
    for (std::size_t i = 0; i < d.grid.size(); ++i)
        csv << format_double(d.grid[i]) << "," << format_double(d.values[i]) << "\n";
    emit(cfg, csv.str());

    json sidecar{{"schema_version", kSchemaVersion},
                 {"left_edge", d.left_edge},
                 {"right_edge", d.right_edge},
                 {"mass", d.mass},
                 {"eta_min", d.eta_min},
                 {"resolution", resolution},
                 {"u", field_json(u)}};
    std::string sidecar_path = cfg.output;
    if (auto dot = sidecar_path.rfind('.'); dot != std::string::npos)
        sidecar_path.erase(dot);
    sidecar_path += ".json";
    std::ofstream out(sidecar_path);
    if (!out) throw bsg::ModelError("cannot write sidecar: " + sidecar_path);
    out << sidecar.dump(2) << "\n";
    return 0;
}

int run_closed_form(const GlobalConfig& cfg, int s, double t_min, double t_max, double t_step) {
    if (t_step <= 0.0) throw CLI::ValidationError("--t-step must be positive");
    std::ostringstream csv;
    csv << "t,sigma_total,sigma_min\n";
    for (double t = t_min; t <= t_max + 1e-12; t += t_step)
        csv << format_double(t) << "," << format_double(bsg::closed_form::sigma_pq(t, s)) << ","
            << format_double(bsg::closed_form::sigma_pq_min(t, s)) << "\n";
    emit(cfg, csv.str());
    return 0;
}

int run_verify(const GlobalConfig& cfg, int N, int samples, std::uint64_t seed,
               const bsg::ComplexityOptions& opts) {
    if (samples < 1) throw CLI::ValidationError("--samples must be >= 1");
    const bsg::ModelParams params = load_model(cfg);
    const bsg::rmt::BlockDims dims = bsg::rmt::admissible_dims(cfg.gamma, N);

    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, double value, double oracle, double tol) {
        const bool pass = std::abs(value - oracle) <= tol;
        all_pass = all_pass && pass;
        checks.push_back({{"name", name},
                          {"value", value},
                          {"oracle", oracle},
                          {"tolerance", tol},
                          {"pass", pass}});
    };

    const std::vector<bsg::FieldPoint> points{{0.0, 0.0, 0.0}, {-2.5, 0.0, 0.0}};
    for (const auto& u : points) {
        const auto [l, r] = bsg::support_edges(params, u);
        const double margin = 0.1 * (r - l) + 1.0;
        const auto dens = bsg::density(params, u, {l - margin, r + margin}, opts.resolution,
                                       opts.eta_min);
        const std::string tag = "u0=" + format_double(u.u0);
        for (int s = 0; s < samples; ++s) {
            const auto es = bsg::rmt::spectrum(bsg::rmt::sample_h(params, dims, u, seed + s));
            record("w1[" + tag + ", seed " + std::to_string(seed + s) + "]",
                   bsg::rmt::w1_distance(es, dens), 0.0, 0.10);
            record("lambda_min[" + tag + ", seed " + std::to_string(seed + s) + "]",
                   es.lambda_min, l, 0.15);
            record("lambda_max[" + tag + ", seed " + std::to_string(seed + s) + "]",
                   es.lambda_max, r, 0.15);
        }
    }
    // prefactor convergence at the requested N
    record("prefactor_log[N=" + std::to_string(N) + "]",
           bsg::rmt::finite_n_prefactor_log(dims, params), bsg::prefactor_limit(params),
           50.0 * std::log(static_cast<double>(N)) / N);
    // coupled construction stays close in operator norm
    const auto h = bsg::rmt::sample_h(params, dims, {-1.0, 0.0, 0.0}, seed);
    const auto hp = bsg::rmt::sample_h_prime(params, dims, {-1.0, 0.0, 0.0}, seed);
    const auto diff_spec = bsg::rmt::spectrum(h - hp);
    record("coupling_opnorm", std::max(std::abs(diff_spec.lambda_min),
                                       std::abs(diff_spec.lambda_max)),
           0.0, 0.5);

    json report{{"schema_version", kSchemaVersion},
                {"n", N},
                {"samples", samples},
                {"seed", seed},
                {"all_pass", all_pass},
                {"checks", checks},
                {"metadata", metadata_block(opts)}};
    emit(cfg, report.dump(2));
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annealed complexity of bipartite spherical spin glasses"};
    app.require_subcommand(1);

    GlobalConfig cfg;
    bsg::ComplexityOptions opts;
    app.add_option("--model", cfg.model_path, "Model description file");
    app.add_option("--gamma", cfg.gamma, "Species ratio in (0,1)")->check(CLI::Range(1e-9, 1.0));
    app.add_flag("--renormalize", cfg.renormalize, "Rescale beta to enforce xi(1,1)=1");
    app.add_option("--threads", cfg.threads, "Worker thread cap (default: BSG_THREADS env)");
    app.add_option("--output", cfg.output, "Output file (default stdout)");
    app.add_option("--format", cfg.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--resolution", opts.resolution, "Density grid resolution")
        ->check(CLI::Range(64, 1 << 20));
    app.add_option("--eta-min", opts.eta_min, "Smallest spectral broadening");

    auto* c_cmpl = app.add_subcommand("complexity", "Solve one variational problem");
    std::string mode = "total";
    double t_value = 0.0;
    bool has_t = false;
    c_cmpl->add_option("--mode", mode, "total|minima")->check(CLI::IsMember({"total", "minima"}));
    auto* t_opt = c_cmpl->add_option("--t", t_value, "Level threshold (sup over u0 <= t)");

    auto* c_curve = app.add_subcommand("curve", "Emit (t, sigma_total, sigma_min) CSV");
    double t_min = -2.2, t_max = 0.5, t_step = 0.05;
    c_curve->add_option("--t-min", t_min);
    c_curve->add_option("--t-max", t_max);
    c_curve->add_option("--t-step", t_step);

    auto* c_thresh = app.add_subcommand("thresholds", "E_infinity and ground-state bound");

    auto* c_dens = app.add_subcommand("density", "Spectral density CSV + JSON sidecar");
    double u0 = 0.0, u1 = 0.0, u2 = 0.0;
    double win_lo = 0.0, win_hi = 0.0;
    c_dens->add_option("--u0", u0);
    c_dens->add_option("--u1", u1);
    c_dens->add_option("--u2", u2);
    auto* wlo = c_dens->add_option("--window-min", win_lo);
    auto* whi = c_dens->add_option("--window-max", win_hi);

    auto* c_closed = app.add_subcommand("closed-form", "Analytic curves for p+q");
    int closed_s = 4;
    double ct_min = -2.2, ct_max = 0.5, ct_step = 0.05;
    c_closed->add_option("--s", closed_s, "p+q (>= 4)")->required();
    c_closed->add_option("--t-min", ct_min);
    c_closed->add_option("--t-max", ct_max);
    c_closed->add_option("--t-step", ct_step);

    auto* c_verify = app.add_subcommand("verify", "Monte Carlo verification report");
    int verify_n = 1002, verify_samples = 1;
    std::uint64_t verify_seed = 1;
    c_verify->add_option("--n", verify_n, "Matrix parameter N (admissible for gamma)");
    c_verify->add_option("--samples", verify_samples);
    c_verify->add_option("--seed", verify_seed);

    // let global options appear after the subcommand too
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        apply_threads(cfg);
        has_t = t_opt->count() > 0;
        if (c_cmpl->parsed())
            return run_complexity(cfg, mode, has_t ? std::optional<double>(t_value) : std::nullopt,
                                  opts);
        if (c_curve->parsed()) return run_curve(cfg, t_min, t_max, t_step, opts);
        if (c_thresh->parsed()) return run_thresholds(cfg, opts);
        if (c_dens->parsed()) {
            std::optional<std::pair<double, double>> window;
            if (wlo->count() > 0 || whi->count() > 0) {
                if (wlo->count() == 0 || whi->count() == 0)
                    throw CLI::ValidationError("--window-min and --window-max go together");
                window = {win_lo, win_hi};
            }
            return run_density(cfg, {u0, u1, u2}, opts.resolution, window, opts.eta_min);
        }
        if (c_closed->parsed()) return run_closed_form(cfg, closed_s, ct_min, ct_max, ct_step);
        if (c_verify->parsed()) return run_verify(cfg, verify_n, verify_samples, verify_seed, opts);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bsg::BoundaryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBoundary;
    } catch (const bsg::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bsg::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
