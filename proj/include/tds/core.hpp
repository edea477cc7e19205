#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tds {

namespace constants {
inline constexpr double gas_constant = 8.31446;        // J/(mol K)
inline constexpr double avogadro = 6.02214e23;         // 1/mol
inline constexpr double hydrogen_molar_mass = 1.008;   // g/mol
inline constexpr double celsius_offset = 273.15;       // K
inline constexpr double debye_frequency = 1e13;        // Hz
inline constexpr std::size_t max_trap_types = 6;
}  // namespace constants

/// Lattice transport constants of the host metal. Energies in J/mol, D_0 in
/// m^2/s, M_M in g/mol, rho_M in g/cm^3, N_L in sites/m^3, C_L0 in mol/m^3.
struct MaterialParams {
    double E_L = 5690.0;
    double D_0 = 7.23e-8;
    double M_M = 55.847;
    double rho_M = 7.8474;
    double N_L = 5.1e29;
    double C_L0 = 0.06;

    /// Initial lattice occupancy C_L0 * N_A / N_L.
    [[nodiscard]] double initial_lattice_occupancy() const;

    friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

/// One trap type. delta_H = E_t - E_d is kept as an identity; use
/// make_trap() to build a consistent instance from the binding energy.
struct TrapSpec {
    double N_T = 1.5e25;         // sites/m^3
    double delta_H = -54.3e3;    // J/mol, negative
    double E_t = 5690.0;         // J/mol
    double E_d = 5690.0 + 54.3e3;
    double nu_t = constants::debye_frequency;
    double nu_d = constants::debye_frequency;
    std::optional<double> theta_T0;  // absent: Oriani equilibrium at T0

    friend bool operator==(const TrapSpec&, const TrapSpec&) = default;
};

/// Trap with E_t given and E_d derived from the binding energy.
TrapSpec make_trap(double N_T, double delta_H, double E_t,
                   double nu_t = constants::debye_frequency,
                   double nu_d = constants::debye_frequency,
                   std::optional<double> theta_T0 = std::nullopt);

/// Specimen and heating schedule. T_min doubles as the start temperature T0.
struct TestProtocol {
    double L = 6.3e-3;       // m
    double phi = 0.055;      // K/s
    double t_rest = 2700.0;  // s
    double T_min = 293.0;    // K
    double T_max = 893.0;    // K

    [[nodiscard]] double T0() const { return T_min; }
    /// Time at which the heating ramp reaches T_max.
    [[nodiscard]] double end_time() const { return t_rest + (T_max - T_min) / phi; }

    friend bool operator==(const TestProtocol&, const TestProtocol&) = default;
};

struct NumericsConfig {
    int n_temperature_evals = 200;
    int n_elements = 100;
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    int series_terms = 800;

    friend bool operator==(const NumericsConfig&, const NumericsConfig&) = default;
};

// Invariant checks; each throws ValidationError with the offending field.
void validate(const MaterialParams& mat);
void validate(const TrapSpec& trap);
void validate(std::span<const TrapSpec> traps);
void validate(const TestProtocol& protocol);
void validate(const NumericsConfig& numerics);

/// D_L = D_0 exp(-E_L / RT).
double diffusivity(const MaterialParams& mat, double T);

/// T = T_min + phi <t - t_rest>.
double temperature_at(const TestProtocol& p, double t);

/// dT/dt of the schedule: 0 while resting, phi on the ramp.
double heating_rate_at(const TestProtocol& p, double t);

/// Sievert's law C_L = S sqrt(p_H2), S in mol/(m^3 sqrt(MPa)), p in MPa.
double sieverts_concentration(double solubility, double pressure);

/// N_L = beta N_A rho_M / M_M with rho_M in g/cm^3 and M_M in g/mol.
double lattice_site_density(double beta, double rho_M, double M_M);

/// K_T = exp(-delta_H / RT).
double equilibrium_constant(double delta_H, double T);

/// Oriani equilibrium trap occupancy for lattice occupancy theta_L.
double oriani_trap_occupancy(double theta_L, double K_T);

}  // namespace tds
