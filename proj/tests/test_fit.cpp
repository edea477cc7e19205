#include "tds/errors.hpp"
#include "tds/fit.hpp"
#include "tds/simulate.hpp"
#include "tds/spectrum.hpp"

#include "validation_cases.hpp"

#include <doctest.h>

#include <cmath>
#include <stop_token>

using namespace tds;

namespace {

// Fast single-trap problem on a thin slab; the experiment is the model's own
// ramp output so the objective vanishes at the truth.
FitProblem synthetic_problem(const TrapSpec& truth) {
    auto c = cases::drexler();
    FitProblem p;
    p.mat = c.mat;
    p.protocol = c.protocol;
    p.numerics.n_temperature_evals = 60;
    p.numerics.n_elements = 40;
    p.numerics.rel_tol = 1e-4;
    p.traps = {truth};
    const std::vector<TrapSpec> traps{truth};
    const auto s = desorption_rate(simulate(Model::oriani, p.mat, traps, p.protocol, p.numerics));
    for (std::size_t k = 1; k < s.size(); ++k) {
        p.exp.T.push_back(s.T[k]);
        p.exp.deltaC.push_back(s.deltaC_total[k]);
    }
    return p;
}

std::optional<double> sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += (v - 1.5) * (v - 1.5);
    }
    return s;
}

SearchBounds box(std::size_t dim, double lo, double hi) {
    return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("swarm minimizes a sphere") {
    PsoOptions opts;
    opts.population = 30;
    opts.max_iterations = 200;
    opts.threads = 1;
    opts.seed = 3;
    const auto out = pso_minimize(box(3, -5.0, 5.0), sphere, 1e6, opts);
    CHECK(out.best_f < 1e-8);
    for (double v : out.best_position) {
        CHECK(v == doctest::Approx(1.5).epsilon(1e-3));
    }
    REQUIRE(!out.trace.empty());
    CHECK(out.trace.front().iteration == 0);
    CHECK(out.trace.back().f_count == out.f_count);
    CHECK(out.f_count == static_cast<std::size_t>(opts.population) * out.trace.size());
    for (std::size_t i = 1; i < out.trace.size(); ++i) {
        CHECK(out.trace[i].best_f <= out.trace[i - 1].best_f);
    }
    CHECK(out.failed == 0);
}

TEST_CASE("swarm results do not depend on the thread count") {
    PsoOptions opts;
    opts.population = 17;
    opts.max_iterations = 40;
    opts.seed = 99;
    opts.threads = 1;
    const auto a = pso_minimize(box(4, -3.0, 2.0), sphere, 1e6, opts);
    opts.threads = 4;
    const auto b = pso_minimize(box(4, -3.0, 2.0), sphere, 1e6, opts);
    const auto c = pso_minimize(box(4, -3.0, 2.0), sphere, 1e6, opts);
    CHECK(a.trace == b.trace);
    CHECK(b.trace == c.trace);
    CHECK(a.best_position == b.best_position);
    opts.seed = 100;
    const auto d = pso_minimize(box(4, -3.0, 2.0), sphere, 1e6, opts);
    CHECK_FALSE(d.trace == a.trace);
}

TEST_CASE("failed evaluations") {
    PsoOptions opts;
    opts.population = 10;
    opts.max_iterations = 5;
    opts.threads = 1;
    const BatchObjective never = [](std::span<const double>) -> std::optional<double> {
        return std::nullopt;
    };
    CHECK_THROWS_AS(pso_minimize(box(2, 0.0, 1.0), never, 1e6, opts), OptimizationStalledError);

    // half the box fails; the penalty keeps the swarm out of it
    const BatchObjective half = [](std::span<const double> x) -> std::optional<double> {
        if (x[0] > 0.0) {
            return std::nullopt;
        }
        return (x[0] + 0.5) * (x[0] + 0.5) + x[1] * x[1];
    };
    opts.max_iterations = 30;
    const auto out = pso_minimize(box(2, -1.0, 1.0), half, 1e6, opts);
    CHECK(out.failed > 0);
    CHECK(out.best_position[0] <= 0.0);
    CHECK(out.best_f < 1e-2);

    CHECK_THROWS_AS(pso_minimize(SearchBounds{{1.0}, {0.0}}, sphere, 1e6, opts), BoundsError);
    opts.population = 1;
    CHECK_THROWS_AS(pso_minimize(box(1, 0.0, 1.0), sphere, 1e6, opts), ValidationError);
}

TEST_CASE("cancellation stops after the current iteration") {
    PsoOptions opts;
    opts.population = 8;
    opts.max_iterations = 1000;
    opts.tolerance = 1e-300;
    opts.threads = 1;
    std::stop_source src;
    const auto out = pso_minimize(
        box(2, -5.0, 5.0), sphere, 1e6, opts,
        [&](const IterationRecord& r) {
            if (r.iteration == 3) {
                src.request_stop();
            }
        },
        src.get_token());
    CHECK(out.reason == Termination::cancelled);
    CHECK(out.trace.size() == 4);

    std::stop_source early;
    early.request_stop();
    const auto none = pso_minimize(box(2, -5.0, 5.0), sphere, 1e6, opts, {}, early.get_token());
    CHECK(none.reason == Termination::cancelled);
    CHECK(none.trace.size() == 1);
}

TEST_CASE("search bounds") {
    const std::vector<TrapSpec> nominal{make_trap(1e24, -60e3, 5690.0),
                                        make_trap(2e23, -90e3, 5690.0)};
    const double N_L = 5.1e29;
    const auto g = make_bounds(BoundsMode::global, nominal, N_L);
    REQUIRE(g.dim() == 4);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(g.lo[2 * i] == -150e3);
        CHECK(g.hi[2 * i] == -15e3);
        CHECK(g.lo[2 * i + 1] == doctest::Approx(std::log10(N_L) - 8.0));
        CHECK(g.hi[2 * i + 1] == doctest::Approx(std::log10(N_L) - 1.0));
    }
    const auto l = make_bounds(BoundsMode::local, nominal, N_L);
    CHECK(l.lo[0] == doctest::Approx(-72e3));
    CHECK(l.hi[0] == doctest::Approx(-48e3));
    CHECK(l.lo[3] == doctest::Approx(std::log10(1.6e23)));
    CHECK(l.hi[3] == doctest::Approx(std::log10(2.4e23)));

    auto zero = nominal;
    zero[1].N_T = 0.0;
    CHECK_THROWS_AS(make_bounds(BoundsMode::local, zero, N_L), BoundsError);
    CHECK_NOTHROW(make_bounds(BoundsMode::global, zero, N_L));

    CHECK(parse_bounds("local") == BoundsMode::local);
    CHECK(bounds_tag(BoundsMode::global) == "global");
    CHECK_THROWS_AS(parse_bounds("wide"), ValidationError);
}

TEST_CASE("search positions decode to consistent traps") {
    FitProblem p;
    p.mat.E_L = 5000.0;
    p.traps = {make_trap(1e24, -60e3, 1.0, 2e12, 3e12), make_trap(1e22, -80e3, 1.0)};
    const std::vector<double> x{-55e3, 24.5, -101e3, 21.0};
    const auto t = decode_position(p, x);
    REQUIRE(t.size() == 2);
    CHECK(t[0].delta_H == -55e3);
    CHECK(t[0].N_T == doctest::Approx(std::pow(10.0, 24.5)).epsilon(1e-14));
    CHECK(t[0].E_t == 5000.0);
    CHECK(t[0].E_d == doctest::Approx(60e3));
    CHECK(t[0].nu_t == 3e12);
    CHECK(t[0].nu_d == 3e12);
    CHECK(t[1].N_T == doctest::Approx(1e21).epsilon(1e-14));
    CHECK_NOTHROW(validate(std::span<const TrapSpec>(t)));
}

TEST_CASE("initial concentration from the released amount") {
    const auto c = cases::martensite();
    const double T0 = 293.0;
    for (double C_exp : {1e-3, 0.5, 20.0}) {
        const double C = solve_initial_concentration(c.traps, c.mat.N_L, C_exp, T0);
        CHECK(C > 0.0);
        CHECK(C <= C_exp);
        // independent mass balance
        const double theta = C * constants::avogadro / c.mat.N_L;
        double total = C;
        for (const auto& t : c.traps) {
            const double K = std::exp(-t.delta_H / (constants::gas_constant * T0));
            total += t.N_T / constants::avogadro * K * theta / (1.0 - theta + K * theta);
        }
        CHECK(total == doctest::Approx(C_exp).epsilon(1e-8));
    }
    CHECK(solve_initial_concentration({}, c.mat.N_L, 0.37, T0) == 0.37);
    CHECK(solve_initial_concentration(c.traps, c.mat.N_L, 0.0, T0) == 0.0);
    CHECK_THROWS_AS(solve_initial_concentration(c.traps, c.mat.N_L, -1.0, T0), DomainError);
}

TEST_CASE("model spectrum interpolated onto measured temperatures") {
    DesorptionSpectrum s;
    s.protocol.t_rest = 10.0;
    s.protocol.T_min = 300.0;
    s.protocol.phi = 1.0;
    // two rest samples then a ramp; deltaC = 2 T on the ramp
    s.t = {0.0, 10.0, 20.0, 30.0, 40.0};
    s.T = {300.0, 300.0, 310.0, 320.0, 330.0};
    s.deltaC_total = {99.0, 600.0, 620.0, 640.0, 660.0};
    const std::vector<double> T{290.0, 300.0, 305.0, 317.5, 330.0, 331.0};
    const auto v = interpolate_on(s, T);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == doctest::Approx(600.0));
    CHECK(v[2] == doctest::Approx(610.0));
    CHECK(v[3] == doctest::Approx(635.0));
    CHECK(v[4] == doctest::Approx(660.0));
    CHECK(v[5] == 0.0);
}

TEST_CASE("released amount of a measured spectrum") {
    ExperimentalSpectrum e;
    e.T = {300.0, 310.0, 330.0, 360.0};
    e.deltaC = {2.0, 2.0, 2.0, 2.0};
    CHECK(experimental_area(e, 0.5) == doctest::Approx(60.0 * 2.0 / 0.5));
    CHECK_NOTHROW(validate(e));
    auto bad = e;
    bad.T[2] = 310.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = e;
    bad.T.pop_back();
    bad.deltaC.pop_back();
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = e;
    bad.deltaC[1] = std::nan("");
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("objective vanishes at the generating traps") {
    const TrapSpec truth = make_trap(6e24, -60e3, cases::drexler().mat.E_L);
    const FitProblem p = synthetic_problem(truth);
    const std::vector<TrapSpec> at{truth};
    CHECK(objective(at, std::nullopt, p) == 0.0);
    std::vector<TrapSpec> off{make_trap(6e24, -63e3, truth.E_t)};
    CHECK(objective(off, std::nullopt, p) > 1e-3);
    off = {make_trap(9e24, -60e3, truth.E_t)};
    CHECK(objective(off, std::nullopt, p) > 1e-3);
}

TEST_CASE("small fit recovers a single trap") {
    const TrapSpec truth = make_trap(6e24, -60e3, cases::drexler().mat.E_L);
    FitProblem p = synthetic_problem(truth);
    p.traps = {make_trap(5.5e24, -57e3, truth.E_t)};
    p.bounds = BoundsMode::local;
    PsoOptions opts;
    opts.population = 12;
    opts.max_iterations = 25;
    opts.seed = 5;
    opts.threads = 1;
    std::size_t calls = 0;
    const auto r = run_pso(p, opts, [&](const IterationRecord&) { ++calls; });
    CHECK(calls == r.trace.size());
    REQUIRE(r.traps.size() == 1);
    CHECK(r.traps[0].delta_H == doctest::Approx(-60e3).epsilon(0.01));
    CHECK(r.traps[0].N_T == doctest::Approx(6e24).epsilon(0.05));
    CHECK(!r.C_L0);
    CHECK(r.failed_evaluations == 0);

    // per-species areas add up to the total
    REQUIRE(r.trap_areas.size() == 1);
    const double lattice = released_amount(r.best_spectrum.t, r.best_spectrum.deltaC_lattice);
    CHECK(lattice + r.trap_areas[0] == doctest::Approx(r.total_area).epsilon(1e-9));

    // same seed, more threads: identical result
    opts.threads = 3;
    const auto again = run_pso(p, opts);
    CHECK(again.trace == r.trace);
    CHECK(again.traps == r.traps);
}

TEST_CASE("fit with the initial concentration tied to the data") {
    const TrapSpec truth = make_trap(6e24, -60e3, cases::drexler().mat.E_L);
    FitProblem p = synthetic_problem(truth);
    p.update_CL0 = true;
    p.bounds = BoundsMode::local;
    PsoOptions opts;
    opts.population = 6;
    opts.max_iterations = 3;
    opts.threads = 1;
    const auto r = run_pso(p, opts);
    REQUIRE(r.C_L0);
    const double C_exp = experimental_area(p.exp, p.protocol.phi);
    CHECK(*r.C_L0 ==
          doctest::Approx(solve_initial_concentration(r.traps, p.mat.N_L, C_exp, 293.0)));
    CHECK(*r.C_L0 < C_exp);

    FitProblem lattice = p;
    lattice.model = Model::lattice;
    CHECK_THROWS_AS(run_pso(lattice, opts), ValidationError);
    FitProblem none = p;
    none.traps.clear();
    CHECK_THROWS_AS(run_pso(none, opts), ValidationError);
}

}  // TEST_SUITE fit
