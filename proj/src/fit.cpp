#include "tds/fit.hpp"

#include "tds/errors.hpp"
#include "tds/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace tds {

void validate(const ExperimentalSpectrum& exp) {
    if (exp.T.size() != exp.deltaC.size()) {
        throw ValidationError("experimental spectrum: T and deltaC lengths differ");
    }
    if (exp.T.size() < 4) {
        throw ValidationError("experimental spectrum: at least 4 points are required");
    }
    for (std::size_t k = 0; k < exp.T.size(); ++k) {
        if (!std::isfinite(exp.T[k]) || !std::isfinite(exp.deltaC[k])) {
            throw ValidationError("experimental spectrum: non-finite value at row " +
                                  std::to_string(k + 1));
        }
        if (k > 0 && !(exp.T[k] > exp.T[k - 1])) {
            throw ValidationError("experimental spectrum: T must be strictly increasing");
        }
    }
}

double experimental_area(const ExperimentalSpectrum& exp, double phi) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < exp.T.size(); ++k) {
        s += 0.5 * (exp.deltaC[k] + exp.deltaC[k + 1]) * (exp.T[k + 1] - exp.T[k]);
    }
    return s / phi;
}

std::string_view bounds_tag(BoundsMode mode) {
    return mode == BoundsMode::global ? "global" : "local";
}

BoundsMode parse_bounds(std::string_view tag) {
    if (tag == "global") {
        return BoundsMode::global;
    }
    if (tag == "local") {
        return BoundsMode::local;
    }
    throw ValidationError("unknown bounds mode '" + std::string(tag) + "'");
}

std::string_view termination_tag(Termination t) {
    switch (t) {
        case Termination::max_iterations:
            return "max_iterations";
        case Termination::stalled:
            return "stalled";
        case Termination::cancelled:
            return "cancelled";
    }
    return "unknown";
}

void validate(const FitProblem& problem) {
    if (problem.model == Model::lattice) {
        throw ValidationError("fit: the lattice model has no trap parameters to infer");
    }
    if (problem.traps.empty() || problem.traps.size() > constants::max_trap_types) {
        throw ValidationError("fit: between 1 and 6 traps are required");
    }
    validate(problem.mat);
    validate(problem.traps);
    validate(problem.protocol);
    validate(problem.numerics);
    validate(problem.exp);
}

void validate(const PsoOptions& opts) {
    if (opts.population < 2) {
        throw ValidationError("pso: population must be >= 2");
    }
    if (opts.max_iterations < 1) {
        throw ValidationError("pso: max_iterations must be >= 1");
    }
    if (!(opts.tolerance > 0.0)) {
        throw ValidationError("pso: tolerance must be > 0");
    }
    if (opts.stall_window < 1) {
        throw ValidationError("pso: stall_window must be >= 1");
    }
}

SearchBounds make_bounds(BoundsMode mode, std::span<const TrapSpec> nominal, double N_L) {
    SearchBounds b;
    for (const auto& t : nominal) {
        if (mode == BoundsMode::global) {
            b.lo.push_back(-150e3);
            b.hi.push_back(-15e3);
            b.lo.push_back(std::log10(N_L * 1e-8));
            b.hi.push_back(std::log10(N_L * 1e-1));
            continue;
        }
        if (!(t.delta_H != 0.0 && std::isfinite(t.delta_H)) ||
            !(t.N_T != 0.0 && std::isfinite(t.N_T))) {
            throw BoundsError("local bounds need finite, nonzero nominal trap values");
        }
        const double h = std::abs(t.delta_H);
        const double sign = t.delta_H < 0.0 ? -1.0 : 1.0;
        b.lo.push_back(std::min(sign * 0.8 * h, sign * 1.2 * h));
        b.hi.push_back(std::max(sign * 0.8 * h, sign * 1.2 * h));
        b.lo.push_back(std::log10(0.8 * std::abs(t.N_T)));
        b.hi.push_back(std::log10(1.2 * std::abs(t.N_T)));
    }
    return b;
}

std::vector<TrapSpec> decode_position(const FitProblem& problem, std::span<const double> x) {
    std::vector<TrapSpec> traps;
    traps.reserve(problem.traps.size());
    for (std::size_t i = 0; i < problem.traps.size(); ++i) {
        const auto& nominal = problem.traps[i];
        traps.push_back(make_trap(std::pow(10.0, x[2 * i + 1]), x[2 * i], problem.mat.E_L,
                                  nominal.nu_d, nominal.nu_d, nominal.theta_T0));
    }
    return traps;
}

double solve_initial_concentration(std::span<const TrapSpec> traps, double N_L, double C_exp,
                                   double T0) {
    if (!(C_exp >= 0.0) || !std::isfinite(C_exp)) {
        throw DomainError("solve_initial_concentration: C_exp must be finite and >= 0");
    }
    if (traps.empty() || C_exp == 0.0) {
        return C_exp;
    }
    const double site_density = N_L / constants::avogadro;  // mol/m^3
    auto residual = [&](double c) {
        const double theta = c / site_density;
        double total = c;
        for (const auto& t : traps) {
            const double K = equilibrium_constant(t.delta_H, T0);
            total += t.N_T / constants::avogadro * (K * theta / (1.0 - theta + K * theta));
        }
        return total - C_exp;
    };
    double lo = 0.0;
    double hi = std::min(C_exp, site_density * (1.0 - 1e-12));
    if (!(residual(hi) >= 0.0)) {
        throw InfeasibleError("solve_initial_concentration: no root in (0, C_exp]");
    }
    for (int it = 0; it < 400 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> interpolate_on(const DesorptionSpectrum& model,
                                   std::span<const double> T_exp) {
    // The rest segment holds every sample at T_min; start at its last one so
    // that temperature is strictly increasing.
    std::size_t first = 0;
    for (std::size_t k = 0; k < model.t.size(); ++k) {
        if (model.t[k] <= model.protocol.t_rest) {
            first = k;
        }
    }
    std::vector<double> out(T_exp.size(), 0.0);
    const auto T0 = model.T.begin() + static_cast<std::ptrdiff_t>(first);
    for (std::size_t i = 0; i < T_exp.size(); ++i) {
        const double T = T_exp[i];
        if (T < model.T[first] || T > model.T.back()) {
            continue;
        }
        auto it = std::upper_bound(T0, model.T.end(), T);
        std::size_t k = static_cast<std::size_t>(it - model.T.begin());
        if (k >= model.T.size()) {
            out[i] = model.deltaC_total.back();
            continue;
        }
        const std::size_t k0 = k - 1;
        const double w = (T - model.T[k0]) / (model.T[k] - model.T[k0]);
        out[i] = model.deltaC_total[k0] + w * (model.deltaC_total[k] - model.deltaC_total[k0]);
    }
    return out;
}

namespace {

double experimental_peak(const ExperimentalSpectrum& exp) {
    double p = 0.0;
    for (double v : exp.deltaC) {
        p = std::max(p, std::abs(v));
    }
    return p > 0.0 ? p : 1.0;
}

std::optional<double> try_objective(std::span<const TrapSpec> traps, std::optional<double> C_L0,
                                    const FitProblem& problem) {
    MaterialParams mat = problem.mat;
    if (C_L0) {
        mat.C_L0 = *C_L0;
    }
    try {
        const SimulationResult r =
            simulate(problem.model, mat, traps, problem.protocol, problem.numerics);
        const DesorptionSpectrum s = desorption_rate(r);
        const std::vector<double> model = interpolate_on(s, problem.exp.T);
        double sum = 0.0;
        for (std::size_t i = 0; i < model.size(); ++i) {
            const double d = model[i] - problem.exp.deltaC[i];
            sum += d * d;
        }
        const double f = std::sqrt(sum / static_cast<double>(model.size()));
        if (!std::isfinite(f)) {
            return std::nullopt;
        }
        return f;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// Uniform double in [0, 1) from the top 53 bits; std distributions are not
// reproducible across standard library implementations.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double objective(std::span<const TrapSpec> traps, std::optional<double> C_L0,
                 const FitProblem& problem) {
    const auto f = try_objective(traps, C_L0, problem);
    return f ? *f : 1e6 * experimental_peak(problem.exp);
}

PsoOutcome pso_minimize(const SearchBounds& bounds, const BatchObjective& f, double penalty,
                        const PsoOptions& opts, const ProgressFn& progress,
                        std::stop_token stop) {
    validate(opts);
    const std::size_t dim = bounds.dim();
    const auto pop = static_cast<std::size_t>(opts.population);
    std::mt19937_64 rng(opts.seed);

    std::vector<double> width(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        if (!(bounds.hi[d] >= bounds.lo[d])) {
            throw BoundsError("pso: empty search interval");
        }
        width[d] = bounds.hi[d] - bounds.lo[d];
    }

    std::vector<double> x(pop * dim), v(pop * dim), pbest(pop * dim);
    std::vector<double> fx(pop), pbest_f(pop);
    std::vector<char> ok(pop);
    for (std::size_t i = 0; i < pop; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            x[i * dim + d] = bounds.lo[d] + uniform01(rng) * width[d];
            v[i * dim + d] = 0.1 * (2.0 * uniform01(rng) - 1.0) * width[d];
        }
    }

    unsigned n_threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(pop)));

    PsoOutcome out;
    auto evaluate_all = [&]() {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(pop);
        auto worker = [&]() {
            for (std::size_t i = next++; i < pop; i = next++) {
                ok[i] = 0;
                fx[i] = penalty;
                if (stop.stop_requested()) {
                    continue;
                }
                try {
                    const auto r = f(std::span<const double>(x.data() + i * dim, dim));
                    ok[i] = r.has_value() ? 1 : 0;
                    fx[i] = r.value_or(penalty);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        if (n_threads == 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(n_threads);
            for (unsigned w = 0; w < n_threads; ++w) {
                pool.emplace_back(worker);
            }
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        std::size_t failed = 0;
        for (std::size_t i = 0; i < pop; ++i) {
            failed += ok[i] ? 0 : 1;
        }
        out.f_count += pop;
        out.failed += failed;
        if (failed == pop && !stop.stop_requested()) {
            throw OptimizationStalledError("pso: every evaluation in an iteration failed");
        }
    };

    std::size_t g = 0;
    auto record = [&](int iteration, int stall) {
        IterationRecord rec;
        rec.iteration = iteration;
        rec.f_count = out.f_count;
        rec.best_f = pbest_f[g];
        double mean = 0.0;
        for (double val : fx) {
            mean += val;
        }
        rec.mean_f = mean / static_cast<double>(pop);
        rec.stall = stall;
        rec.best_position.assign(pbest.begin() + static_cast<std::ptrdiff_t>(g * dim),
                                 pbest.begin() + static_cast<std::ptrdiff_t>((g + 1) * dim));
        out.trace.push_back(rec);
        if (progress) {
            progress(rec);
        }
    };

    evaluate_all();
    pbest = x;
    pbest_f = fx;
    for (std::size_t i = 1; i < pop; ++i) {
        if (pbest_f[i] < pbest_f[g]) {
            g = i;
        }
    }
    // Best personal best among the ring neighbours of particle i (ties go to
    // the lower index so the choice does not depend on evaluation order).
    auto social_leader = [&](std::size_t i) {
        if (opts.neighborhood <= 0) {
            return g;
        }
        const auto r = static_cast<std::size_t>(opts.neighborhood);
        std::size_t best = i;
        for (std::size_t o = 1; o <= r && o < pop; ++o) {
            for (std::size_t j : {(i + o) % pop, (i + pop - o % pop) % pop}) {
                if (pbest_f[j] < pbest_f[best] || (pbest_f[j] == pbest_f[best] && j < best)) {
                    best = j;
                }
            }
        }
        return best;
    };

    int stall = 0;
    record(0, stall);
    if (stop.stop_requested()) {
        out.reason = Termination::cancelled;
    }

    for (int it = 1; it <= opts.max_iterations && !stop.stop_requested(); ++it) {
        for (std::size_t i = 0; i < pop; ++i) {
            const std::size_t leader = social_leader(i);
            for (std::size_t d = 0; d < dim; ++d) {
                const std::size_t k = i * dim + d;
                const double r1 = uniform01(rng);
                const double r2 = uniform01(rng);
                double vel = opts.inertia * v[k] + opts.cognitive * r1 * (pbest[k] - x[k]) +
                             opts.social * r2 * (pbest[leader * dim + d] - x[k]);
                vel = std::clamp(vel, -width[d], width[d]);
                double pos = x[k] + vel;
                if (pos < bounds.lo[d] || pos > bounds.hi[d]) {
                    pos = std::clamp(pos, bounds.lo[d], bounds.hi[d]);
                    vel = 0.0;
                }
                x[k] = pos;
                v[k] = vel;
            }
        }
        evaluate_all();
        if (stop.stop_requested()) {
            out.reason = Termination::cancelled;
            break;
        }
        const double previous = pbest_f[g];
        for (std::size_t i = 0; i < pop; ++i) {
            if (fx[i] < pbest_f[i]) {
                pbest_f[i] = fx[i];
                std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * dim), dim,
                            pbest.begin() + static_cast<std::ptrdiff_t>(i * dim));
            }
        }
        for (std::size_t i = 0; i < pop; ++i) {
            if (pbest_f[i] < pbest_f[g]) {
                g = i;
            }
        }
        stall = pbest_f[g] < previous ? 0 : stall + 1;
        record(it, stall);

        const auto W = static_cast<std::size_t>(opts.stall_window);
        if (out.trace.size() > W) {
            const double then = out.trace[out.trace.size() - 1 - W].best_f;
            const double now = pbest_f[g];
            const double scale = std::max(std::abs(then), std::numeric_limits<double>::min());
            if ((then - now) / scale < opts.tolerance) {
                out.reason = Termination::stalled;
                break;
            }
        }
    }
    if (stop.stop_requested()) {
        out.reason = Termination::cancelled;
    }
    out.best_f = pbest_f[g];
    out.best_position.assign(pbest.begin() + static_cast<std::ptrdiff_t>(g * dim),
                             pbest.begin() + static_cast<std::ptrdiff_t>((g + 1) * dim));
    return out;
}

FitResult run_pso(const FitProblem& problem, const PsoOptions& opts, const ProgressFn& progress,
                  std::stop_token stop) {
    validate(problem);
    validate(opts);
    const SearchBounds bounds = make_bounds(problem.bounds, problem.traps, problem.mat.N_L);
    const double C_exp = experimental_area(problem.exp, problem.protocol.phi);
    const double T0 = problem.protocol.T0();

    auto candidate_CL0 = [&](std::span<const TrapSpec> traps) -> std::optional<double> {
        if (!problem.update_CL0) {
            return std::nullopt;
        }
        return solve_initial_concentration(traps, problem.mat.N_L, C_exp, T0);
    };

    const BatchObjective f = [&](std::span<const double> x) -> std::optional<double> {
        for (std::size_t d = 0; d < x.size(); ++d) {
            if (x[d] < bounds.lo[d] || x[d] > bounds.hi[d]) {
                throw BoundsError("pso: candidate outside the search box");
            }
        }
        const auto traps = decode_position(problem, x);
        std::optional<double> C_L0;
        try {
            C_L0 = candidate_CL0(traps);
        } catch (const InfeasibleError&) {
            return std::nullopt;
        }
        if (C_L0 && !(*C_L0 > 0.0)) {
            return std::nullopt;
        }
        return try_objective(traps, C_L0, problem);
    };

    const PsoOutcome o =
        pso_minimize(bounds, f, 1e6 * experimental_peak(problem.exp), opts, progress, stop);

    FitResult r;
    r.traps = decode_position(problem, o.best_position);
    r.best_f = o.best_f;
    r.C_L0 = candidate_CL0(r.traps);
    r.trace = o.trace;
    r.reason = o.reason;
    r.f_count = o.f_count;
    r.failed_evaluations = o.failed;

    MaterialParams mat = problem.mat;
    if (r.C_L0) {
        mat.C_L0 = *r.C_L0;
    }
    try {
        const SimulationResult sim =
            simulate(problem.model, mat, r.traps, problem.protocol, problem.numerics);
        r.best_spectrum = desorption_rate(sim);
        r.total_area = released_amount(r.best_spectrum.t, r.best_spectrum.deltaC_total);
        for (const auto& series : r.best_spectrum.deltaC_trap) {
            r.trap_areas.push_back(released_amount(r.best_spectrum.t, series));
        }
    } catch (const SolverError&) {
        // The best candidate can itself be a penalized failure when every
        // particle struggled; report it without a spectrum.
    }
    return r;
}

}  // namespace tds
