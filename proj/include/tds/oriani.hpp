#pragma once

#include "tds/core.hpp"
#include "tds/mol.hpp"
#include "tds/simulation.hpp"

#include <vector>

namespace tds {

/// Local-equilibrium (Oriani) trapping. Only N_T and delta_H of each trap
/// enter the model; the kinetic fields are validated and otherwise ignored.
struct OrianiProblem {
    MaterialParams mat;
    std::vector<TrapSpec> traps;  // 0 to 6
    TestProtocol protocol;
    NumericsConfig numerics;
};

/// Method-of-lines form of the reduced equilibrium PDE in the scaled lattice
/// occupancy u = theta_L / theta_L0 on n_elements + 1 uniform nodes over
/// x_bar in [-1/2, 1/2]. The two face nodes stay in the state with zero
/// derivative so that they remain pinned at u = 0.
class OrianiSystem : public RampedSystem {
public:
    OrianiSystem(NondimParams params, int n_elements);

    [[nodiscard]] std::size_t size() const override { return n_nodes_; }
    [[nodiscard]] std::size_t lower_bandwidth() const override { return 1; }
    [[nodiscard]] std::size_t upper_bandwidth() const override { return 1; }

    void rhs(double t, std::span<const double> y, std::span<double> dydt) const override;
    void jacobian(double t, std::span<const double> y, ode::BandMatrix& J) const override;

    /// Trap occupancy of trap i at scaled lattice occupancy u and T_bar.
    [[nodiscard]] double trap_occupancy(std::size_t i, double u, double T_bar) const;
    /// d theta_T / d t_bar given u, du/dt_bar and the current schedule.
    [[nodiscard]] double trap_occupancy_rate(std::size_t i, double u, double du, double T_bar) const;

private:
    std::size_t n_nodes_;
    double inv_dx2_;
};

/// Solves the equilibrium-trapping problem and returns dimensional fields
/// with semi-discrete rate fields attached.
SimulationResult solve_oriani(const OrianiProblem& problem);

}  // namespace tds
