#include "tds/core.hpp"

#include "tds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tds {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ValidationError(what);
    }
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

double MaterialParams::initial_lattice_occupancy() const {
    return C_L0 * constants::avogadro / N_L;
}

TrapSpec make_trap(double N_T, double delta_H, double E_t, double nu_t, double nu_d,
                   std::optional<double> theta_T0) {
    TrapSpec trap;
    trap.N_T = N_T;
    trap.delta_H = delta_H;
    trap.E_t = E_t;
    trap.E_d = E_t - delta_H;
    trap.nu_t = nu_t;
    trap.nu_d = nu_d;
    trap.theta_T0 = theta_T0;
    return trap;
}

void validate(const MaterialParams& mat) {
    require(finite(mat.E_L) && mat.E_L >= 0.0, "material: E_L must be >= 0");
    require(finite(mat.D_0) && mat.D_0 > 0.0, "material: D_0 must be > 0");
    require(finite(mat.M_M) && mat.M_M > 0.0, "material: M_M must be > 0");
    require(finite(mat.rho_M) && mat.rho_M > 0.0, "material: rho_M must be > 0");
    require(finite(mat.N_L) && mat.N_L > 0.0, "material: N_L must be > 0");
    require(finite(mat.C_L0) && mat.C_L0 >= 0.0, "material: C_L0 must be >= 0");
    require(mat.initial_lattice_occupancy() < 1.0,
            "material: initial lattice occupancy C_L0*N_A/N_L must be < 1");
}

void validate(const TrapSpec& trap) {
    require(finite(trap.N_T) && trap.N_T > 0.0, "trap: N_T must be > 0");
    require(finite(trap.delta_H) && trap.delta_H < 0.0, "trap: delta_H must be negative");
    require(finite(trap.E_t) && finite(trap.E_d), "trap: E_t and E_d must be finite");
    const double scale = std::max({std::abs(trap.E_t), std::abs(trap.E_d), 1.0});
    require(std::abs(trap.delta_H - (trap.E_t - trap.E_d)) <= 1e-9 * scale,
            "trap: delta_H must equal E_t - E_d");
    require(finite(trap.nu_t) && trap.nu_t > 0.0, "trap: nu_t must be > 0");
    require(finite(trap.nu_d) && trap.nu_d > 0.0, "trap: nu_d must be > 0");
    if (trap.theta_T0) {
        require(*trap.theta_T0 >= 0.0 && *trap.theta_T0 <= 1.0,
                "trap: theta_T0 must lie in [0, 1]");
    }
}

void validate(std::span<const TrapSpec> traps) {
    require(traps.size() <= constants::max_trap_types, "at most 6 trap types are supported");
    for (const auto& t : traps) {
        validate(t);
    }
}

void validate(const TestProtocol& p) {
    require(finite(p.L) && p.L > 0.0, "protocol: L must be > 0");
    require(finite(p.phi) && p.phi > 0.0, "protocol: phi must be > 0");
    require(finite(p.t_rest) && p.t_rest >= 0.0, "protocol: t_rest must be >= 0");
    require(finite(p.T_min) && p.T_min > 0.0, "protocol: T_min must be > 0");
    require(finite(p.T_max) && p.T_max > p.T_min, "protocol: T_max must exceed T_min");
}

void validate(const NumericsConfig& n) {
    require(n.n_temperature_evals >= 2, "numerics: n_temperature_evals must be >= 2");
    require(n.n_elements >= 4 && n.n_elements % 2 == 0,
            "numerics: n_elements must be even and >= 4");
    require(n.rel_tol > 0.0 && n.abs_tol > 0.0, "numerics: tolerances must be > 0");
    require(n.series_terms >= 1, "numerics: series_terms must be >= 1");
}

double diffusivity(const MaterialParams& mat, double T) {
    if (!(T > 0.0)) {
        throw DomainError("diffusivity: temperature must be positive");
    }
    return mat.D_0 * std::exp(-mat.E_L / (constants::gas_constant * T));
}

double temperature_at(const TestProtocol& p, double t) {
    if (!(t >= 0.0)) {
        throw DomainError("temperature_at: time must be non-negative");
    }
    return p.T_min + p.phi * std::max(t - p.t_rest, 0.0);
}

double heating_rate_at(const TestProtocol& p, double t) {
    if (!(t >= 0.0)) {
        throw DomainError("heating_rate_at: time must be non-negative");
    }
    return t < p.t_rest ? 0.0 : p.phi;
}

double sieverts_concentration(double solubility, double pressure) {
    if (!(solubility >= 0.0) || !(pressure >= 0.0)) {
        throw DomainError("sieverts_concentration: solubility and pressure must be >= 0");
    }
    return solubility * std::sqrt(pressure);
}

double lattice_site_density(double beta, double rho_M, double M_M) {
    if (!(beta > 0.0) || !(rho_M > 0.0) || !(M_M > 0.0)) {
        throw DomainError("lattice_site_density: inputs must be positive");
    }
    // g/cm^3 -> kg/m^3 and g/mol -> kg/mol
    return beta * constants::avogadro * (rho_M * 1e3) / (M_M * 1e-3);
}

double equilibrium_constant(double delta_H, double T) {
    if (!(T > 0.0)) {
        throw DomainError("equilibrium_constant: temperature must be positive");
    }
    return std::exp(-delta_H / (constants::gas_constant * T));
}

double oriani_trap_occupancy(double theta_L, double K_T) {
    if (!(theta_L >= 0.0) || !(theta_L < 1.0)) {
        throw DomainError("oriani_trap_occupancy: theta_L must lie in [0, 1)");
    }
    if (!(K_T > 0.0)) {
        throw DomainError("oriani_trap_occupancy: K_T must be positive");
    }
    // theta_T = K r / (1 + K r) with r = theta_L / (1 - theta_L), rearranged so
    // that huge K does not overflow.
    return K_T * theta_L / (1.0 - theta_L + K_T * theta_L);
}

}  // namespace tds
