#pragma once

#include "tds/nondim.hpp"
#include "tds/stiff_integrator.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace tds {

/// Semi-discrete system on the dimensionless time axis whose temperature
/// follows the rest-then-ramp schedule. The ramp flag is switched by the
/// driver at t_rest_bar so that dT/dt is exactly zero while resting and the
/// kink never sits inside a step.
class RampedSystem : public ode::StiffSystem {
public:
    explicit RampedSystem(NondimParams params) : p_(std::move(params)) {}

    void set_ramp(bool active) { ramp_ = active; }
    [[nodiscard]] bool ramp_active() const { return ramp_; }
    [[nodiscard]] const NondimParams& params() const { return p_; }

    [[nodiscard]] double temperature(double t_bar) const {
        return ramp_ ? p_.temperature_bar(t_bar) : 1.0;
    }
    [[nodiscard]] double heating_rate() const { return ramp_ ? p_.phi_bar : 0.0; }

    /// Zero while resting; a forward difference on the ramp.
    void time_derivative(double t, std::span<const double> y, std::span<const double> f0,
                         std::span<double> dfdt) const override;

protected:
    NondimParams p_;
    bool ramp_ = false;
};

using SampleFn = std::function<void(std::size_t, double, std::span<const double>)>;

/// Integrates y from t_bar = 0 through every requested output time and calls
/// `sample(k, t_bar, y)` at each (including k = 0 with the initial state).
/// The ramp flag is off up to t_rest_bar and on afterwards.
ode::IntegratorStats integrate_to_outputs(RampedSystem& system, std::span<double> y,
                                          std::span<const double> t_out,
                                          const ode::IntegratorOptions& options,
                                          const SampleFn& sample);

}  // namespace tds
