#pragma once
// Small measurements on spectra shared by the unit tests and the acceptance
// runner.

#include "tds/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace tds::checks {

/// First sample with t >= t_rest.
inline std::size_t ramp_start(const DesorptionSpectrum& s) {
    std::size_t k = 0;
    while (k < s.size() && s.t[k] < s.protocol.t_rest) {
        ++k;
    }
    return k;
}

/// Mean outflow over the first output interval of the ramp, scaled as
/// J L / (D_0 C_L0). The flux itself is unbounded at t = 0+ without a rest.
inline double initial_ramp_flux(const SimulationResult& r) {
    std::size_t k = 0;
    while (r.t[k] < r.protocol.t_rest) {
        ++k;
    }
    const double released = inventory(r, r.t[k]).total - inventory(r, r.t[k + 1]).total;
    const double J = 0.5 * r.protocol.L * released / (r.t[k + 1] - r.t[k]);
    return J * r.protocol.L / (r.mat.D_0 * r.mat.C_L0);
}

inline std::size_t argmax(const std::vector<double>& v, std::size_t from = 0) {
    return static_cast<std::size_t>(std::max_element(v.begin() + static_cast<std::ptrdiff_t>(from),
                                                     v.end()) -
                                    v.begin());
}

inline double max_value(const std::vector<double>& v, std::size_t from = 0) {
    return v[argmax(v, from)];
}

/// Max |a - b| over samples [from, end).
inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b,
                           std::size_t from = 0) {
    double d = 0.0;
    for (std::size_t k = from; k < a.size() && k < b.size(); ++k) {
        d = std::max(d, std::abs(a[k] - b[k]));
    }
    return d;
}

/// Interior local maxima of v[from..] that stand above `floor` times the
/// largest value.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& v, std::size_t from = 0,
                                             double floor = 1e-3) {
    std::vector<std::size_t> out;
    const double top = max_value(v, from);
    for (std::size_t k = from + 1; k + 1 < v.size(); ++k) {
        if (v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] > floor * top) {
            out.push_back(k);
        }
    }
    return out;
}

}  // namespace tds::checks
