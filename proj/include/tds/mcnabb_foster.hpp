#pragma once

#include "tds/core.hpp"
#include "tds/mol.hpp"
#include "tds/simulation.hpp"

#include <utility>
#include <vector>

namespace tds {

/// Kinetic trapping: one capture/release ODE per trap type per node coupled
/// to lattice diffusion.
struct McNabbFosterProblem {
    MaterialParams mat;
    std::vector<TrapSpec> traps;  // 0 to 6; none reduces to plain diffusion
    TestProtocol protocol;
    NumericsConfig numerics;
};

/// theta_T0 of a trap: the explicit override when present, else the
/// equilibrium occupancy at the initial lattice occupancy and T0.
double initial_trap_occupancy(const TrapSpec& trap, const MaterialParams& mat, double T0);

/// Capture and release frequencies (k, p) [1/s] at temperature T.
std::pair<double, double> rate_constants(const TrapSpec& trap, double T);

/// Node-interleaved state [u, theta_T1, ..., theta_Tn] per node, where the
/// lattice variable is u = theta_L / theta_ref with theta_ref = theta_L0 (or
/// 1 for an uncharged lattice). Trap occupancies are carried unscaled since
/// theta_T0 may be zero.
class McNabbFosterSystem : public RampedSystem {
public:
    McNabbFosterSystem(NondimParams params, int n_elements);

    [[nodiscard]] std::size_t size() const override { return n_nodes_ * stride_; }
    [[nodiscard]] std::size_t lower_bandwidth() const override { return stride_; }
    [[nodiscard]] std::size_t upper_bandwidth() const override { return stride_; }

    void rhs(double t, std::span<const double> y, std::span<double> dydt) const override;
    void jacobian(double t, std::span<const double> y, ode::BandMatrix& J) const override;

    [[nodiscard]] std::size_t stride() const { return stride_; }
    [[nodiscard]] std::size_t n_nodes() const { return n_nodes_; }
    [[nodiscard]] double theta_ref() const { return theta_ref_; }

private:
    std::size_t n_nodes_;
    std::size_t stride_;
    double inv_dx2_;
    double theta_ref_;
};

SimulationResult solve_mcnabb_foster(const McNabbFosterProblem& problem);

}  // namespace tds
