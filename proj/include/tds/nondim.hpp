#pragma once

#include "tds/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace tds {

/// Trap groups scaled by N_L, RT0 and L^2/D_0.
struct NondimTrap {
    double N_T_bar = 0.0;      // N_T / N_L
    double delta_H_bar = 0.0;  // delta_H / (R T0)
    double E_t_bar = 0.0;      // E_t / (R T0)
    double E_d_bar = 0.0;      // E_d / (R T0)
    double nu_t_bar = 0.0;     // nu_t L^2 / D_0
    double nu_d_bar = 0.0;     // nu_d L^2 / D_0
    std::optional<double> theta_T0;  // explicit override, carried through

    friend bool operator==(const NondimTrap&, const NondimTrap&) = default;
};

/// Dimensionless form of a problem. Reference scales are T0 (= T_min), L,
/// D_0, R T0, N_L and the initial lattice occupancy theta_L0. State
/// variables map as x_bar = x/L, t_bar = t D_0/L^2, T_bar = T/T0 and
/// theta_L_bar = theta_L / theta_L0.
struct NondimParams {
    // reference scales
    double T0 = 1.0;
    double L = 1.0;
    double D_0 = 1.0;
    double N_L = 1.0;
    double theta_L0 = 0.0;

    // dimensionless groups
    double phi_bar = 0.0;     // phi L^2 / (T0 D_0)
    double E_L_bar = 0.0;     // E_L / (R T0)
    double t_rest_bar = 0.0;  // t_rest D_0 / L^2
    double T_max_bar = 1.0;   // T_max / T0
    std::vector<NondimTrap> traps;

    // unit-conversion bookkeeping, not part of the transport problem
    double M_M = 1.0;
    double rho_M = 1.0;

    [[nodiscard]] double x_bar(double x) const { return x / L; }
    [[nodiscard]] double t_bar(double t) const { return t * D_0 / (L * L); }
    [[nodiscard]] double T_bar(double T) const { return T / T0; }
    [[nodiscard]] double time_scale() const { return L * L / D_0; }
    /// D_L / D_0 at a dimensionless temperature.
    [[nodiscard]] double D_L_bar(double T_bar) const;
    /// Dimensionless schedule: 1 + phi_bar <t_bar - t_rest_bar>.
    [[nodiscard]] double temperature_bar(double t_bar) const;
    [[nodiscard]] double end_time_bar() const { return t_rest_bar + (T_max_bar - 1.0) / phi_bar; }

    friend bool operator==(const NondimParams&, const NondimParams&) = default;
};

struct DimensionalProblem {
    MaterialParams mat;
    std::vector<TrapSpec> traps;
    TestProtocol protocol;
};

NondimParams nondimensionalize(const MaterialParams& mat, std::span<const TrapSpec> traps,
                               const TestProtocol& protocol);

DimensionalProblem dimensionalize(const NondimParams& p);

}  // namespace tds
