#include "tds/nondim.hpp"

#include <algorithm>
#include <cmath>

namespace tds {

using constants::gas_constant;

double NondimParams::D_L_bar(double T_bar) const { return std::exp(-E_L_bar / T_bar); }

double NondimParams::temperature_bar(double t_bar) const {
    return 1.0 + phi_bar * std::max(t_bar - t_rest_bar, 0.0);
}

NondimParams nondimensionalize(const MaterialParams& mat, std::span<const TrapSpec> traps,
                               const TestProtocol& protocol) {
    NondimParams p;
    p.T0 = protocol.T0();
    p.L = protocol.L;
    p.D_0 = mat.D_0;
    p.N_L = mat.N_L;
    p.theta_L0 = mat.initial_lattice_occupancy();

    const double RT0 = gas_constant * p.T0;
    const double L2_over_D0 = p.L * p.L / p.D_0;
    p.phi_bar = protocol.phi * L2_over_D0 / p.T0;
    p.E_L_bar = mat.E_L / RT0;
    p.t_rest_bar = protocol.t_rest / L2_over_D0;
    p.T_max_bar = protocol.T_max / p.T0;
    p.M_M = mat.M_M;
    p.rho_M = mat.rho_M;

    p.traps.reserve(traps.size());
    for (const auto& t : traps) {
        NondimTrap nt;
        nt.N_T_bar = t.N_T / mat.N_L;
        nt.delta_H_bar = t.delta_H / RT0;
        nt.E_t_bar = t.E_t / RT0;
        nt.E_d_bar = t.E_d / RT0;
        nt.nu_t_bar = t.nu_t * L2_over_D0;
        nt.nu_d_bar = t.nu_d * L2_over_D0;
        nt.theta_T0 = t.theta_T0;
        p.traps.push_back(nt);
    }
    return p;
}

DimensionalProblem dimensionalize(const NondimParams& p) {
    DimensionalProblem d;
    const double RT0 = gas_constant * p.T0;
    const double L2_over_D0 = p.L * p.L / p.D_0;

    d.mat.E_L = p.E_L_bar * RT0;
    d.mat.D_0 = p.D_0;
    d.mat.M_M = p.M_M;
    d.mat.rho_M = p.rho_M;
    d.mat.N_L = p.N_L;
    d.mat.C_L0 = p.theta_L0 * p.N_L / constants::avogadro;

    d.protocol.L = p.L;
    d.protocol.phi = p.phi_bar * p.T0 / L2_over_D0;
    d.protocol.t_rest = p.t_rest_bar * L2_over_D0;
    d.protocol.T_min = p.T0;
    d.protocol.T_max = p.T_max_bar * p.T0;

    d.traps.reserve(p.traps.size());
    for (const auto& nt : p.traps) {
        TrapSpec t;
        t.N_T = nt.N_T_bar * p.N_L;
        t.delta_H = nt.delta_H_bar * RT0;
        t.E_t = nt.E_t_bar * RT0;
        t.E_d = nt.E_d_bar * RT0;
        t.nu_t = nt.nu_t_bar / L2_over_D0;
        t.nu_d = nt.nu_d_bar / L2_over_D0;
        t.theta_T0 = nt.theta_T0;
        d.traps.push_back(t);
    }
    return d;
}

}  // namespace tds
