#pragma once

#include "tds/core.hpp"
#include "tds/simulation.hpp"
#include "tds/spectrum.hpp"

#include <functional>

namespace tds {

/// Separation-of-variables solution of trap-free lattice diffusion out of a
/// uniformly charged slab with both faces held at zero concentration.
struct SeriesSolution {
    MaterialParams mat;
    TestProtocol protocol;
    int n_terms = 800;
};

/// Adaptive Simpson quadrature of f on [a, b] to a relative tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol);

/// Time integral of D_L(T(t)) from 0 to t [m^2]. The resting segment is
/// integrated exactly, the ramp by adaptive Simpson in temperature.
double dft(const TestProtocol& protocol, const MaterialParams& mat, double t);

/// C_L(x, t) from the truncated cosine series [mol/m^3].
double lattice_concentration(const SeriesSolution& sol, double x, double t);

/// dC_L/dt(x, t), differentiated term by term.
double lattice_concentration_rate(const SeriesSolution& sol, double x, double t);

/// Spatial mean of the truncated series at time t.
double lattice_average(const SeriesSolution& sol, double t);

/// -d/dt of the spatial mean, differentiated term by term [mol/(m^3 s)].
double lattice_desorption_rate(const SeriesSolution& sol, double t);

/// Outflow through +L/2, -D_L dC_L/dx from the differentiated series.
double lattice_surface_flux(const SeriesSolution& sol, double t);

/// Desorption spectrum on the standard output grid. Sample 0 holds the mean
/// rate over the first output interval.
DesorptionSpectrum lattice_spectrum(const SeriesSolution& sol, const NumericsConfig& numerics);

/// The series sampled on the standard space-time grid, with analytic rate
/// fields. Row 0 holds the uniform initial condition.
SimulationResult lattice_result(const SeriesSolution& sol, const NumericsConfig& numerics);

}  // namespace tds
