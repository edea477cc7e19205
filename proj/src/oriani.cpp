#include "tds/oriani.hpp"

#include "tds/errors.hpp"
#include "tds/nondim.hpp"

#include <cmath>
#include <sstream>

namespace tds {

OrianiSystem::OrianiSystem(NondimParams params, int n_elements)
    : RampedSystem(std::move(params)),
      n_nodes_(static_cast<std::size_t>(n_elements) + 1),
      inv_dx2_(static_cast<double>(n_elements) * static_cast<double>(n_elements)) {}

double OrianiSystem::trap_occupancy(std::size_t i, double u, double T_bar) const {
    const double K = std::exp(-p_.traps[i].delta_H_bar / T_bar);
    const double theta = p_.theta_L0 * u;
    return K * theta / (1.0 - theta + K * theta);
}

double OrianiSystem::trap_occupancy_rate(std::size_t i, double u, double du, double T_bar) const {
    const auto& tr = p_.traps[i];
    const double K = std::exp(-tr.delta_H_bar / T_bar);
    const double theta = p_.theta_L0 * u;
    const double d = 1.0 + (K - 1.0) * theta;
    const double dg_dtheta = K / (d * d);
    const double dg_dK = theta * (1.0 - theta) / (d * d);
    const double dK_dT = K * tr.delta_H_bar / (T_bar * T_bar);
    return dg_dtheta * p_.theta_L0 * du + dg_dK * dK_dT * heating_rate();
}

void OrianiSystem::rhs(double t, std::span<const double> y, std::span<double> dydt) const {
    const double T = temperature(t);
    const double D = p_.D_L_bar(T);
    const double phi = heating_rate();
    const double th0 = p_.theta_L0;
    const std::size_t n = n_nodes_;
    dydt[0] = 0.0;
    dydt[n - 1] = 0.0;

    // Per-trap constants for this temperature.
    const std::size_t nt = p_.traps.size();
    double K[constants::max_trap_types];
    double a[constants::max_trap_types];
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = p_.traps[i];
        K[i] = std::exp(-tr.delta_H_bar / T);
        a[i] = K[i] * tr.N_T_bar * tr.delta_H_bar * phi / (T * T);
    }

    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double u = y[j];
        const double lap = (y[j - 1] - 2.0 * u + y[j + 1]) * inv_dx2_;
        double capacity = 1.0;
        double source = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double d = 1.0 + (K[i] - 1.0) * th0 * u;
            const double d2 = d * d;
            capacity += p_.traps[i].N_T_bar * K[i] / d2;
            source += a[i] * (u - th0 * u * u) / d2;
        }
        dydt[j] = (D * lap - source) / capacity;
    }
}

void OrianiSystem::jacobian(double t, std::span<const double> y, ode::BandMatrix& J) const {
    const double T = temperature(t);
    const double D = p_.D_L_bar(T);
    const double phi = heating_rate();
    const double th0 = p_.theta_L0;
    const std::size_t n = n_nodes_;
    const std::size_t nt = p_.traps.size();
    double K[constants::max_trap_types];
    double a[constants::max_trap_types];
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = p_.traps[i];
        K[i] = std::exp(-tr.delta_H_bar / T);
        a[i] = K[i] * tr.N_T_bar * tr.delta_H_bar * phi / (T * T);
    }

    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double u = y[j];
        const double lap = (y[j - 1] - 2.0 * u + y[j + 1]) * inv_dx2_;
        double B = 1.0;
        double dB = 0.0;
        double S = 0.0;
        double dS = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double c = (K[i] - 1.0) * th0;
            const double d = 1.0 + c * u;
            const double d2 = d * d;
            const double d3 = d2 * d;
            const double N = p_.traps[i].N_T_bar;
            B += N * K[i] / d2;
            dB += -2.0 * N * K[i] * c / d3;
            const double q = u - th0 * u * u;
            S += a[i] * q / d2;
            dS += a[i] * ((1.0 - 2.0 * th0 * u) / d2 - 2.0 * q * c / d3);
        }
        const double num = D * lap - S;
        J(j, j - 1) = D * inv_dx2_ / B;
        J(j, j + 1) = D * inv_dx2_ / B;
        J(j, j) = (-2.0 * D * inv_dx2_ - dS) / B - num * dB / (B * B);
    }
}

namespace {

void check_occupancy(const NondimParams& p, std::span<const double> u, double t_bar,
                     double tol) {
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double theta = p.theta_L0 * u[j];
        if (u[j] < -tol || theta >= 1.0 || !std::isfinite(u[j])) {
            std::ostringstream msg;
            msg << "oriani solver: lattice occupancy left [0, 1) at node " << j
                << ", t_bar=" << t_bar << " (theta_L=" << theta << ", u=" << u[j] << ")";
            throw SolverInstabilityError(msg.str());
        }
    }
}

}  // namespace

SimulationResult solve_oriani(const OrianiProblem& problem) {
    validate(problem.mat);
    validate(problem.traps);
    validate(problem.protocol);
    validate(problem.numerics);

    const NondimParams p = nondimensionalize(problem.mat, problem.traps, problem.protocol);
    OrianiSystem system(p, problem.numerics.n_elements);

    SimulationResult r;
    r.model = Model::oriani;
    r.mat = problem.mat;
    r.protocol = problem.protocol;
    r.traps = problem.traps;
    r.x = spatial_grid(problem.protocol.L, problem.numerics.n_elements);
    r.t = output_times(problem.protocol, problem.numerics.n_temperature_evals);
    const std::size_t nt = r.t.size();
    const std::size_t nx = r.x.size();
    const std::size_t ntraps = problem.traps.size();
    r.T.resize(nt);
    r.C_L = Field(nt, nx);
    r.dC_L_dt = Field(nt, nx);
    r.C_T.assign(ntraps, Field(nt, nx));
    r.dC_T_dt.assign(ntraps, Field(nt, nx));

    std::vector<double> t_bar(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        t_bar[k] = p.t_bar(r.t[k]);
        r.T[k] = temperature_at(problem.protocol, r.t[k]);
    }

    std::vector<double> u(nx, 1.0);
    u.front() = 0.0;
    u.back() = 0.0;

    const double C_L0 = problem.mat.C_L0;
    const double per_time = 1.0 / p.time_scale();
    std::vector<double> trap_scale(ntraps);
    for (std::size_t i = 0; i < ntraps; ++i) {
        trap_scale[i] = problem.traps[i].N_T / constants::avogadro;
    }
    const double tol = 1e3 * problem.numerics.rel_tol + 10.0 * problem.numerics.abs_tol;
    std::vector<double> du(nx);

    auto sample = [&](std::size_t k, double tb, std::span<const double> y) {
        check_occupancy(p, y, tb, tol);
        const double Tb = system.temperature(tb);
        if (k == 0) {
            // The recorded initial condition is the uniform charge; the face
            // values only drop to zero for t > 0.
            for (std::size_t j = 0; j < nx; ++j) {
                r.C_L(0, j) = C_L0;
                for (std::size_t i = 0; i < ntraps; ++i) {
                    r.C_T[i](0, j) = trap_scale[i] * system.trap_occupancy(i, 1.0, Tb);
                }
            }
            return;
        }
        system.rhs(tb, y, du);
        for (std::size_t j = 0; j < nx; ++j) {
            r.C_L(k, j) = C_L0 * y[j];
            r.dC_L_dt(k, j) = C_L0 * du[j] * per_time;
            for (std::size_t i = 0; i < ntraps; ++i) {
                r.C_T[i](k, j) = trap_scale[i] * system.trap_occupancy(i, y[j], Tb);
                r.dC_T_dt[i](k, j) =
                    trap_scale[i] * system.trap_occupancy_rate(i, y[j], du[j], Tb) * per_time;
            }
        }
    };

    ode::IntegratorOptions opt;
    opt.rel_tol = problem.numerics.rel_tol;
    opt.abs_tol = problem.numerics.abs_tol;
    integrate_to_outputs(system, u, t_bar, opt, sample);
    return r;
}

}  // namespace tds
