#include "tds/mcnabb_foster.hpp"

#include "tds/errors.hpp"
#include "tds/nondim.hpp"

#include <cmath>
#include <sstream>

namespace tds {

double initial_trap_occupancy(const TrapSpec& trap, const MaterialParams& mat, double T0) {
    if (trap.theta_T0) {
        return *trap.theta_T0;
    }
    return oriani_trap_occupancy(mat.initial_lattice_occupancy(),
                                 equilibrium_constant(trap.delta_H, T0));
}

std::pair<double, double> rate_constants(const TrapSpec& trap, double T) {
    if (!(T > 0.0)) {
        throw DomainError("rate_constants: temperature must be positive");
    }
    const double RT = constants::gas_constant * T;
    return {trap.nu_t * std::exp(-trap.E_t / RT), trap.nu_d * std::exp(-trap.E_d / RT)};
}

McNabbFosterSystem::McNabbFosterSystem(NondimParams params, int n_elements)
    : RampedSystem(std::move(params)),
      n_nodes_(static_cast<std::size_t>(n_elements) + 1),
      stride_(1 + p_.traps.size()),
      inv_dx2_(static_cast<double>(n_elements) * static_cast<double>(n_elements)),
      theta_ref_(p_.theta_L0 > 0.0 ? p_.theta_L0 : 1.0) {}

void McNabbFosterSystem::rhs(double t, std::span<const double> y, std::span<double> dydt) const {
    const double T = temperature(t);
    const double D = p_.D_L_bar(T);
    const std::size_t nt = p_.traps.size();
    const std::size_t m = stride_;
    double k[constants::max_trap_types];
    double r[constants::max_trap_types];
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = p_.traps[i];
        k[i] = tr.nu_t_bar * std::exp(-tr.E_t_bar / T);
        r[i] = tr.nu_d_bar * std::exp(-tr.E_d_bar / T);
    }
    for (std::size_t j = 0; j < n_nodes_; ++j) {
        const std::size_t b = j * m;
        const double u = y[b];
        const double theta_L = theta_ref_ * u;
        double sink = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double th = y[b + 1 + i];
            const double g = k[i] * theta_L * (1.0 - th) - r[i] * th * (1.0 - theta_L);
            dydt[b + 1 + i] = g;
            sink += p_.traps[i].N_T_bar / theta_ref_ * g;
        }
        if (j == 0 || j + 1 == n_nodes_) {
            dydt[b] = 0.0;
        } else {
            const double lap = (y[b - m] - 2.0 * u + y[b + m]) * inv_dx2_;
            dydt[b] = D * lap - sink;
        }
    }
}

void McNabbFosterSystem::jacobian(double t, std::span<const double> y, ode::BandMatrix& J) const {
    const double T = temperature(t);
    const double D = p_.D_L_bar(T);
    const std::size_t nt = p_.traps.size();
    const std::size_t m = stride_;
    double k[constants::max_trap_types];
    double r[constants::max_trap_types];
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = p_.traps[i];
        k[i] = tr.nu_t_bar * std::exp(-tr.E_t_bar / T);
        r[i] = tr.nu_d_bar * std::exp(-tr.E_d_bar / T);
    }
    for (std::size_t j = 0; j < n_nodes_; ++j) {
        const std::size_t b = j * m;
        const double u = y[b];
        const double theta_L = theta_ref_ * u;
        const bool face = (j == 0 || j + 1 == n_nodes_);
        double duu = -2.0 * D * inv_dx2_;
        for (std::size_t i = 0; i < nt; ++i) {
            const double th = y[b + 1 + i];
            const double dg_du = k[i] * theta_ref_ * (1.0 - th) + r[i] * th * theta_ref_;
            const double dg_dth = -k[i] * theta_L - r[i] * (1.0 - theta_L);
            J(b + 1 + i, b) = dg_du;
            J(b + 1 + i, b + 1 + i) = dg_dth;
            const double w = p_.traps[i].N_T_bar / theta_ref_;
            duu -= w * dg_du;
            if (!face) {
                J(b, b + 1 + i) = -w * dg_dth;
            }
        }
        if (!face) {
            J(b, b) = duu;
            J(b, b - m) = D * inv_dx2_;
            J(b, b + m) = D * inv_dx2_;
        }
    }
}

namespace {

void check_occupancy(const McNabbFosterSystem& sys, std::span<const double> y, double t_bar,
                     double tol) {
    const std::size_t m = sys.stride();
    for (std::size_t j = 0; j < sys.n_nodes(); ++j) {
        const double theta_L = sys.theta_ref() * y[j * m];
        bool bad = !std::isfinite(y[j * m]) || y[j * m] < -tol || theta_L >= 1.0;
        for (std::size_t i = 1; i < m && !bad; ++i) {
            const double th = y[j * m + i];
            bad = !std::isfinite(th) || th < -tol || th > 1.0 + tol;
        }
        if (bad) {
            std::ostringstream msg;
            msg << "kinetic trapping solver: occupancy left [0, 1] at node " << j
                << ", t_bar=" << t_bar;
            throw SolverInstabilityError(msg.str());
        }
    }
}

}  // namespace

SimulationResult solve_mcnabb_foster(const McNabbFosterProblem& problem) {
    validate(problem.mat);
    validate(problem.traps);
    validate(problem.protocol);
    validate(problem.numerics);
    for (const auto& trap : problem.traps) {
        if (trap.E_t < 0.0 || trap.E_d < 0.0) {
            throw ValidationError("trap: E_t and E_d must be >= 0 for kinetic trapping");
        }
    }

    SimulationResult r;
    r.model = Model::mcnabb_foster;
    r.mat = problem.mat;
    r.protocol = problem.protocol;
    r.traps = problem.traps;
    for (std::size_t i = 0; i < problem.traps.size(); ++i) {
        const double ratio = problem.traps[i].N_T / problem.mat.N_L;
        if (ratio > 0.05) {
            std::ostringstream msg;
            msg << "trap " << i + 1 << ": N_T/N_L = " << ratio
                << " exceeds 0.05; the dilute-trap reduction may be inaccurate";
            r.warnings.push_back(msg.str());
        }
    }

    const NondimParams p = nondimensionalize(problem.mat, problem.traps, problem.protocol);
    McNabbFosterSystem system(p, problem.numerics.n_elements);

    r.x = spatial_grid(problem.protocol.L, problem.numerics.n_elements);
    r.t = output_times(problem.protocol, problem.numerics.n_temperature_evals);
    const std::size_t nt = r.t.size();
    const std::size_t nx = r.x.size();
    const std::size_t ntraps = problem.traps.size();
    const std::size_t m = system.stride();
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

    const double T0 = problem.protocol.T0();
    std::vector<double> theta_T0(ntraps);
    for (std::size_t i = 0; i < ntraps; ++i) {
        theta_T0[i] = initial_trap_occupancy(problem.traps[i], problem.mat, T0);
    }
    const double u0 = p.theta_L0 / system.theta_ref();
    // Face nodes start empty, traps included: the surface condition removes
    // their content at t = 0+ as in the equilibrium model. Left filled, the
    // half-cell of trapped hydrogen on each face would leak out at the bare
    // release rate p, an O(dx) artifact that shows up as a spurious peak.
    std::vector<double> y(system.size());
    for (std::size_t j = 0; j < nx; ++j) {
        const bool face = (j == 0 || j + 1 == nx);
        y[j * m] = face ? 0.0 : u0;
        for (std::size_t i = 0; i < ntraps; ++i) {
            y[j * m + 1 + i] = face ? 0.0 : theta_T0[i];
        }
    }

    const double lattice_scale = system.theta_ref() * problem.mat.N_L / constants::avogadro;
    const double per_time = 1.0 / p.time_scale();
    std::vector<double> trap_scale(ntraps);
    for (std::size_t i = 0; i < ntraps; ++i) {
        trap_scale[i] = problem.traps[i].N_T / constants::avogadro;
    }
    const double tol = 1e3 * problem.numerics.rel_tol + 10.0 * problem.numerics.abs_tol;
    std::vector<double> dy(system.size());

    auto sample = [&](std::size_t k, double tb, std::span<const double> state) {
        check_occupancy(system, state, tb, tol);
        if (k == 0) {
            for (std::size_t j = 0; j < nx; ++j) {
                r.C_L(0, j) = problem.mat.C_L0;
                for (std::size_t i = 0; i < ntraps; ++i) {
                    r.C_T[i](0, j) = trap_scale[i] * theta_T0[i];
                }
            }
            return;
        }
        system.rhs(tb, state, dy);
        for (std::size_t j = 0; j < nx; ++j) {
            r.C_L(k, j) = lattice_scale * state[j * m];
            r.dC_L_dt(k, j) = lattice_scale * dy[j * m] * per_time;
            for (std::size_t i = 0; i < ntraps; ++i) {
                r.C_T[i](k, j) = trap_scale[i] * state[j * m + 1 + i];
                r.dC_T_dt[i](k, j) = trap_scale[i] * dy[j * m + 1 + i] * per_time;
            }
        }
    };

    ode::IntegratorOptions opt;
    opt.rel_tol = problem.numerics.rel_tol;
    opt.abs_tol = problem.numerics.abs_tol;
    integrate_to_outputs(system, y, t_bar, opt, sample);
    return r;
}

}  // namespace tds
