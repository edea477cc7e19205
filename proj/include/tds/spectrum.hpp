#pragma once

#include "tds/core.hpp"
#include "tds/simulation.hpp"

#include <vector>

namespace tds {

/// Desorption rate and flux versus temperature/time. Rates in mol/(m^3 s),
/// positive for hydrogen leaving the specimen; flux in mol/(m^2 s) through
/// the face at +L/2.
struct DesorptionSpectrum {
    Model model = Model::oriani;
    TestProtocol protocol;

    std::vector<double> T;
    std::vector<double> t;
    std::vector<double> deltaC_total;
    std::vector<double> deltaC_lattice;
    std::vector<std::vector<double>> deltaC_trap;
    std::vector<double> flux;

    [[nodiscard]] std::size_t size() const { return T.size(); }
};

struct BoundaryFlux {
    std::vector<double> left;   // outflow through x = -L/2
    std::vector<double> right;  // outflow through x = +L/2
};

/// J = -D_L dC_L/dx at both faces, one-sided three-point differences,
/// reported as positive outflow. The surface gradient is undefined at t = 0
/// (the surface value jumps to zero), so sample 0 carries the mean outflow
/// over the first output interval instead.
BoundaryFlux boundary_flux(const SimulationResult& r);

/// Per-species desorption rates. Uses the semi-discrete rates stored in r
/// when present, central differences of the spatial averages otherwise.
/// Sample 0 is the mean rate over the first output interval: the rate is
/// unbounded at t = 0+.
DesorptionSpectrum desorption_rate(const SimulationResult& r);

struct Inventory {
    double C_L = 0.0;
    std::vector<double> C_T;
    double total = 0.0;
};

/// Spatial averages (trapezoid) at time t, linear in time between samples.
Inventory inventory(const SimulationResult& r, double t);

/// Hydrogen released according to a spectrum: the first output interval
/// contributes its mean rate times its length, the remainder is integrated
/// with Simpson's rule.
double released_amount(const std::vector<double>& t, const std::vector<double>& rate);

/// |C_total(0) - integral of deltaC_total dt| / C_total(0).
double mass_balance_residual(const SimulationResult& r);

/// Spatial trapezoid average of one row of a field.
double spatial_average(std::span<const double> x, std::span<const double> values);

}  // namespace tds
