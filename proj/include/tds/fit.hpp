#pragma once

#include "tds/core.hpp"
#include "tds/simulation.hpp"
#include "tds/spectrum.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

namespace tds {

/// Measured desorption rate versus temperature in internal units
/// (K, mol/(m^3 s)).
struct ExperimentalSpectrum {
    std::vector<double> T;
    std::vector<double> deltaC;
    std::string source;

    [[nodiscard]] std::size_t size() const { return T.size(); }
    friend bool operator==(const ExperimentalSpectrum&, const ExperimentalSpectrum&) = default;
};

/// T strictly increasing, equal lengths >= 4, finite values.
void validate(const ExperimentalSpectrum& exp);

/// Hydrogen released over the record, the integral of deltaC dT / phi.
double experimental_area(const ExperimentalSpectrum& exp, double phi);

enum class BoundsMode { global, local };

std::string_view bounds_tag(BoundsMode mode);
BoundsMode parse_bounds(std::string_view tag);

/// Inverse problem: the base problem's traps are the initial guesses (and
/// the nominal values for local bounds); their count fixes n_traps.
struct FitProblem {
    Model model = Model::oriani;
    MaterialParams mat;
    std::vector<TrapSpec> traps;
    TestProtocol protocol;
    NumericsConfig numerics;
    ExperimentalSpectrum exp;
    BoundsMode bounds = BoundsMode::global;
    bool update_CL0 = false;
};

void validate(const FitProblem& problem);

struct PsoOptions {
    int max_iterations = 150;
    int population = 400;
    double tolerance = 1e-11;
    int stall_window = 20;
    std::uint64_t seed = 0;
    double inertia = 0.7298;
    double cognitive = 1.4962;
    double social = 1.4962;
    int neighborhood = 2;  // ring radius for the social term; 0: whole swarm
    unsigned threads = 0;  // 0: hardware concurrency
};

void validate(const PsoOptions& opts);

/// Search box. Coordinates per trap are (delta_H [J/mol], log10 N_T).
struct SearchBounds {
    std::vector<double> lo;
    std::vector<double> hi;
    [[nodiscard]] std::size_t dim() const { return lo.size(); }
};

/// Global: delta_H in [-150, -15] kJ/mol and N_T in [1e-8, 1e-1] N_L for
/// every trap. Local: 80-120 % of each nominal value.
SearchBounds make_bounds(BoundsMode mode, std::span<const TrapSpec> nominal, double N_L);

/// Traps for a search position: E_t = E_L, nu_t = nu_d = the nominal nu_d,
/// E_d from the binding energy.
std::vector<TrapSpec> decode_position(const FitProblem& problem, std::span<const double> x);

/// Root C_L0 in (0, C_exp] of the initial mass balance
/// C_L0 + sum_i C_T^(i)(C_L0) = C_exp with equilibrium trap occupancies at T0.
double solve_initial_concentration(std::span<const TrapSpec> traps, double N_L, double C_exp,
                                   double T0);

/// Model deltaC_total interpolated onto the experimental temperatures using
/// the ramp part of the run. Points outside the simulated range read 0.
std::vector<double> interpolate_on(const DesorptionSpectrum& model,
                                   std::span<const double> T_exp);

/// Root-mean-square misfit between a candidate's spectrum and the data.
/// A failed forward solve yields 1e6 times the experimental peak.
double objective(std::span<const TrapSpec> traps, std::optional<double> C_L0,
                 const FitProblem& problem);

struct IterationRecord {
    int iteration = 0;
    std::size_t f_count = 0;
    double best_f = 0.0;
    double mean_f = 0.0;
    int stall = 0;
    std::vector<double> best_position;
    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

enum class Termination { max_iterations, stalled, cancelled };
std::string_view termination_tag(Termination t);

struct FitResult {
    std::vector<TrapSpec> traps;
    double best_f = 0.0;
    std::optional<double> C_L0;
    std::vector<IterationRecord> trace;
    Termination reason = Termination::max_iterations;
    std::size_t f_count = 0;
    std::size_t failed_evaluations = 0;

    DesorptionSpectrum best_spectrum;
    std::vector<double> trap_areas;  // released per trap [mol/m^3]
    double total_area = 0.0;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

// Generic bounded particle swarm, used by run_pso and testable on its own.
// The evaluator returns nullopt for a failed evaluation.
using BatchObjective = std::function<std::optional<double>(std::span<const double>)>;

struct PsoOutcome {
    std::vector<double> best_position;
    double best_f = 0.0;
    std::vector<IterationRecord> trace;
    Termination reason = Termination::max_iterations;
    std::size_t f_count = 0;
    std::size_t failed = 0;
};

/// Minimizes f over the box. Evaluations within an iteration run on
/// opts.threads workers; results do not depend on the thread count.
/// `penalty` replaces failed evaluations.
PsoOutcome pso_minimize(const SearchBounds& bounds, const BatchObjective& f, double penalty,
                        const PsoOptions& opts, const ProgressFn& progress = {},
                        std::stop_token stop = {});

FitResult run_pso(const FitProblem& problem, const PsoOptions& opts,
                  const ProgressFn& progress = {}, std::stop_token stop = {});

}  // namespace tds
