#include "tds/spectrum.hpp"

#include "tds/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tds {

double spatial_average(std::span<const double> x, std::span<const double> values) {
    const std::size_t n = x.size();
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        s += 0.5 * (values[j] + values[j + 1]) * (x[j + 1] - x[j]);
    }
    return s / (x.back() - x.front());
}

namespace {

std::vector<double> averages(const SimulationResult& r, const Field& f) {
    std::vector<double> out(r.n_times());
    for (std::size_t k = 0; k < r.n_times(); ++k) {
        out[k] = spatial_average(r.x, f.row(k));
    }
    return out;
}

// Negated time derivative of a spatially averaged field on the output grid.
std::vector<double> species_rate(const SimulationResult& r, const Field& field,
                                 const Field* rate_field) {
    const std::size_t n = r.n_times();
    std::vector<double> avg = averages(r, field);
    std::vector<double> out(n, 0.0);
    if (n < 2) {
        return out;
    }
    const auto& t = r.t;
    out[0] = (avg[0] - avg[1]) / (t[1] - t[0]);
    if (rate_field != nullptr && !rate_field->empty()) {
        for (std::size_t k = 1; k < n; ++k) {
            out[k] = -spatial_average(r.x, rate_field->row(k));
        }
        return out;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        out[k] = -(avg[k + 1] - avg[k - 1]) / (t[k + 1] - t[k - 1]);
    }
    if (n >= 3) {
        const std::size_t e = n - 1;
        const double h = t[e] - t[e - 1];
        out[e] = -(3.0 * avg[e] - 4.0 * avg[e - 1] + avg[e - 2]) / (2.0 * h);
    } else {
        out[1] = out[0];
    }
    return out;
}

double total_average(const SimulationResult& r, std::size_t k) {
    double s = spatial_average(r.x, r.C_L.row(k));
    for (const auto& f : r.C_T) {
        s += spatial_average(r.x, f.row(k));
    }
    return s;
}

}  // namespace

BoundaryFlux boundary_flux(const SimulationResult& r) {
    const std::size_t nx = r.n_nodes();
    if (nx < 3) {
        throw GridError("boundary_flux: at least 3 spatial nodes are required");
    }
    const std::size_t nt = r.n_times();
    BoundaryFlux out;
    out.left.assign(nt, 0.0);
    out.right.assign(nt, 0.0);
    const std::size_t e = nx - 1;
    const double dx_left = r.x[1] - r.x[0];
    const double dx_right = r.x[e] - r.x[e - 1];
    for (std::size_t k = 1; k < nt; ++k) {
        const double D = diffusivity(r.mat, r.T[k]);
        const auto c = r.C_L.row(k);
        const double grad_left = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * dx_left);
        const double grad_right = (3.0 * c[e] - 4.0 * c[e - 1] + c[e - 2]) / (2.0 * dx_right);
        out.left[k] = D * grad_left;
        out.right[k] = -D * grad_right;
    }
    if (nt >= 2) {
        const double L = r.x[e] - r.x[0];
        const double drop = total_average(r, 0) - total_average(r, 1);
        const double per_face = 0.5 * L * drop / (r.t[1] - r.t[0]);
        out.left[0] = per_face;
        out.right[0] = per_face;
    }
    return out;
}

DesorptionSpectrum desorption_rate(const SimulationResult& r) {
    DesorptionSpectrum s;
    s.model = r.model;
    s.protocol = r.protocol;
    s.T = r.T;
    s.t = r.t;
    s.deltaC_lattice = species_rate(r, r.C_L, r.has_rates() ? &r.dC_L_dt : nullptr);
    s.deltaC_total = s.deltaC_lattice;
    for (std::size_t i = 0; i < r.C_T.size(); ++i) {
        const Field* rate = (r.has_rates() && i < r.dC_T_dt.size()) ? &r.dC_T_dt[i] : nullptr;
        s.deltaC_trap.push_back(species_rate(r, r.C_T[i], rate));
        for (std::size_t k = 0; k < s.deltaC_total.size(); ++k) {
            s.deltaC_total[k] += s.deltaC_trap.back()[k];
        }
    }
    s.flux = boundary_flux(r).right;
    return s;
}

Inventory inventory(const SimulationResult& r, double t) {
    const auto& ts = r.t;
    if (ts.empty()) {
        throw DomainError("inventory: empty result");
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(ts.back()));
    if (t < ts.front() - slack || t > ts.back() + slack) {
        throw DomainError("inventory: time outside the simulated run");
    }
    t = std::clamp(t, ts.front(), ts.back());
    std::size_t k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    k = k == 0 ? 0 : k - 1;
    std::size_t k1 = std::min(k + 1, ts.size() - 1);
    const double w = (k1 == k) ? 0.0 : (t - ts[k]) / (ts[k1] - ts[k]);

    auto interp = [&](const Field& f) {
        const double a = spatial_average(r.x, f.row(k));
        if (w == 0.0) {
            return a;
        }
        const double b = spatial_average(r.x, f.row(k1));
        return a + w * (b - a);
    };

    Inventory inv;
    inv.C_L = interp(r.C_L);
    inv.total = inv.C_L;
    for (const auto& f : r.C_T) {
        inv.C_T.push_back(interp(f));
        inv.total += inv.C_T.back();
    }
    return inv;
}

double released_amount(const std::vector<double>& t, const std::vector<double>& rate) {
    const std::size_t n = t.size();
    if (n < 2) {
        return 0.0;
    }
    double s = rate[0] * (t[1] - t[0]);
    std::size_t k = 1;
    // Simpson over pairs of intervals (unequal spacing allowed), a trapezoid
    // for a leftover last interval.
    for (; k + 2 < n; k += 2) {
        const double h0 = t[k + 1] - t[k];
        const double h1 = t[k + 2] - t[k + 1];
        const double h = h0 + h1;
        s += h / 6.0 *
             ((2.0 - h1 / h0) * rate[k] + h * h / (h0 * h1) * rate[k + 1] +
              (2.0 - h0 / h1) * rate[k + 2]);
    }
    if (k + 1 < n) {
        s += 0.5 * (rate[k] + rate[k + 1]) * (t[k + 1] - t[k]);
    }
    return s;
}

double mass_balance_residual(const SimulationResult& r) {
    const double initial = inventory(r, r.t.front()).total;
    if (!(initial > 0.0)) {
        throw UndefinedResidualError("mass_balance_residual: run holds no hydrogen at t = 0");
    }
    const DesorptionSpectrum s = desorption_rate(r);
    return std::abs(initial - released_amount(s.t, s.deltaC_total)) / initial;
}

}  // namespace tds
