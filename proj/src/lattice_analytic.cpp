#include "tds/lattice_analytic.hpp"

#include "tds/errors.hpp"

#include <cmath>
#include <numbers>

namespace tds {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double whole, double eps, int depth, double fm_a_b_mid) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm_a_b_mid);
    const double right = (b - m) / 6.0 * (fm_a_b_mid + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, fa, m, fm_a_b_mid, left, 0.5 * eps, depth - 1, flm) +
           simpson_step(f, m, fm_a_b_mid, b, fb, right, 0.5 * eps, depth - 1, frm);
}

// Truncation of the series once terms fall below double resolution.
constexpr double kNegligible = 1e-18;

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double eps = rel_tol * std::max(std::abs(whole), 1e-300);
    return simpson_step(f, a, fa, b, fb, whole, eps, 50, fm);
}

double dft(const TestProtocol& protocol, const MaterialParams& mat, double t) {
    if (!(t >= 0.0)) {
        throw DomainError("dft: time must be non-negative");
    }
    const double T0 = protocol.T0();
    double value = diffusivity(mat, T0) * std::min(t, protocol.t_rest);
    if (t > protocol.t_rest) {
        const double T = temperature_at(protocol, t);
        value += adaptive_simpson([&](double temp) { return diffusivity(mat, temp); }, T0, T,
                                  1e-10) /
                 protocol.phi;
    }
    return value;
}

double lattice_concentration(const SeriesSolution& sol, double x, double t) {
    const double L = sol.protocol.L;
    if (std::abs(x) > 0.5 * L * (1.0 + 1e-14)) {
        throw DomainError("lattice_concentration: x outside the specimen");
    }
    if (std::abs(x) >= 0.5 * L) {
        return 0.0;
    }
    const double d = dft(sol.protocol, sol.mat, t);
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0; n < sol.n_terms; ++n) {
        const double m = 2.0 * n + 1.0;
        const double decay = std::exp(-pi * pi * m * m * d / (L * L));
        if (decay < kNegligible) {
            break;
        }
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        sum += sign / m * decay * std::cos(m * pi * x / L);
    }
    return 4.0 * sol.mat.C_L0 / pi * sum;
}

double lattice_concentration_rate(const SeriesSolution& sol, double x, double t) {
    const double L = sol.protocol.L;
    if (std::abs(x) > 0.5 * L * (1.0 + 1e-14)) {
        throw DomainError("lattice_concentration_rate: x outside the specimen");
    }
    if (std::abs(x) >= 0.5 * L) {
        return 0.0;
    }
    const double d = dft(sol.protocol, sol.mat, t);
    const double D = diffusivity(sol.mat, temperature_at(sol.protocol, t));
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0; n < sol.n_terms; ++n) {
        const double m = 2.0 * n + 1.0;
        const double a = pi * pi * m * m / (L * L);
        const double decay = std::exp(-a * d);
        if (decay < kNegligible) {
            break;
        }
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        sum += sign / m * a * decay * std::cos(m * pi * x / L);
    }
    return -4.0 * sol.mat.C_L0 / pi * D * sum;
}

double lattice_average(const SeriesSolution& sol, double t) {
    const double L = sol.protocol.L;
    const double d = dft(sol.protocol, sol.mat, t);
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0; n < sol.n_terms; ++n) {
        const double m = 2.0 * n + 1.0;
        const double decay = std::exp(-pi * pi * m * m * d / (L * L));
        if (decay < kNegligible) {
            break;
        }
        sum += decay / (m * m);
    }
    return 8.0 * sol.mat.C_L0 / (pi * pi) * sum;
}

double lattice_desorption_rate(const SeriesSolution& sol, double t) {
    const double L = sol.protocol.L;
    const double d = dft(sol.protocol, sol.mat, t);
    const double D = diffusivity(sol.mat, temperature_at(sol.protocol, t));
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0; n < sol.n_terms; ++n) {
        const double m = 2.0 * n + 1.0;
        const double decay = std::exp(-pi * pi * m * m * d / (L * L));
        if (decay < kNegligible * std::max(sum, 1.0)) {
            break;
        }
        sum += decay;
    }
    return 8.0 * sol.mat.C_L0 * D / (L * L) * sum;
}

double lattice_surface_flux(const SeriesSolution& sol, double t) {
    return 0.5 * sol.protocol.L * lattice_desorption_rate(sol, t);
}

DesorptionSpectrum lattice_spectrum(const SeriesSolution& sol, const NumericsConfig& numerics) {
    validate(sol.mat);
    validate(sol.protocol);
    validate(numerics);
    DesorptionSpectrum s;
    s.model = Model::lattice;
    s.protocol = sol.protocol;
    s.t = output_times(sol.protocol, numerics.n_temperature_evals);
    const std::size_t n = s.t.size();
    s.T.resize(n);
    s.deltaC_lattice.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.T[k] = temperature_at(sol.protocol, s.t[k]);
        if (k > 0) {
            s.deltaC_lattice[k] = lattice_desorption_rate(sol, s.t[k]);
        }
    }
    s.deltaC_lattice[0] = (sol.mat.C_L0 - lattice_average(sol, s.t[1])) / (s.t[1] - s.t[0]);
    s.deltaC_total = s.deltaC_lattice;
    s.flux.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.flux[k] = 0.5 * sol.protocol.L * s.deltaC_total[k];
    }
    return s;
}

SimulationResult lattice_result(const SeriesSolution& sol, const NumericsConfig& numerics) {
    validate(sol.mat);
    validate(sol.protocol);
    validate(numerics);
    SimulationResult r;
    r.model = Model::lattice;
    r.mat = sol.mat;
    r.protocol = sol.protocol;
    r.x = spatial_grid(sol.protocol.L, numerics.n_elements);
    r.t = output_times(sol.protocol, numerics.n_temperature_evals);
    const std::size_t nt = r.t.size();
    const std::size_t nx = r.x.size();
    r.T.resize(nt);
    r.C_L = Field(nt, nx);
    r.dC_L_dt = Field(nt, nx);

    const double L = sol.protocol.L;
    const double pi = std::numbers::pi;
    const auto terms = static_cast<std::size_t>(sol.n_terms);
    // cos((2n+1) pi x / L) / (2n+1) * (-1)^n, tabulated once per node
    std::vector<double> basis(terms * nx);
    for (std::size_t n = 0; n < terms; ++n) {
        const double m = 2.0 * static_cast<double>(n) + 1.0;
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        for (std::size_t j = 0; j < nx; ++j) {
            basis[n * nx + j] = sign / m * std::cos(m * pi * r.x[j] / L);
        }
    }

    std::vector<double> decay(terms);
    for (std::size_t k = 0; k < nt; ++k) {
        r.T[k] = temperature_at(sol.protocol, r.t[k]);
        if (k == 0) {
            for (std::size_t j = 0; j < nx; ++j) {
                r.C_L(0, j) = sol.mat.C_L0;
            }
            continue;
        }
        const double d = dft(sol.protocol, sol.mat, r.t[k]);
        const double D = diffusivity(sol.mat, r.T[k]);
        std::size_t used = 0;
        for (; used < terms; ++used) {
            const double m = 2.0 * static_cast<double>(used) + 1.0;
            decay[used] = std::exp(-pi * pi * m * m * d / (L * L));
            if (decay[used] < kNegligible) {
                break;
            }
        }
        for (std::size_t j = 0; j < nx; ++j) {
            if (j == 0 || j == nx - 1) {
                continue;
            }
            double c = 0.0;
            double dc = 0.0;
            for (std::size_t n = 0; n < used; ++n) {
                const double m = 2.0 * static_cast<double>(n) + 1.0;
                const double term = basis[n * nx + j] * decay[n];
                c += term;
                dc += term * pi * pi * m * m / (L * L);
            }
            r.C_L(k, j) = 4.0 * sol.mat.C_L0 / pi * c;
            r.dC_L_dt(k, j) = -4.0 * sol.mat.C_L0 / pi * D * dc;
        }
    }
    return r;
}

}  // namespace tds
